#include "wattless/diffpatch.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>

namespace wattless {

namespace {

constexpr std::string_view no_newline_marker = "\\ No newline at end of file";

struct Op {
    LineTag tag;
    std::size_t a = 0; // index into a (context/remove)
    std::size_t b = 0; // index into b (context/insert)
};

/// Edit script over lines; context ops pair a[i] with b[j].
std::vector<Op> edit_script(const std::vector<std::string_view>& a, const std::vector<std::string_view>& b)
{
    std::vector<Op> ops;
    std::size_t prefix = 0;
    while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
        ops.push_back({LineTag::context, prefix, prefix});
        ++prefix;
    }
    const std::size_t n = a.size() - prefix;
    const std::size_t m = b.size() - prefix;
    std::vector<Op> middle;
    if (n == 0 || m == 0 || (n + 1) * (m + 1) > max_lcs_cells) {
        for (std::size_t j = 0; j < m; ++j) {
            middle.push_back({LineTag::insert, prefix + n, prefix + j});
        }
        for (std::size_t i = 0; i < n; ++i) {
            middle.push_back({LineTag::remove, prefix + i, prefix + m});
        }
    } else {
        // L[i][j] = LCS length of a[prefix+i..] and b[prefix+j..]
        const std::size_t w = m + 1;
        std::vector<std::uint32_t> L((n + 1) * w, 0);
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = m; j-- > 0;) {
                if (a[prefix + i] == b[prefix + j]) {
                    L[i * w + j] = L[(i + 1) * w + j + 1] + 1;
                } else {
                    L[i * w + j] = std::max(L[(i + 1) * w + j], L[i * w + j + 1]);
                }
            }
        }
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < n || j < m) {
            if (i < n && j < m && a[prefix + i] == b[prefix + j]) {
                middle.push_back({LineTag::context, prefix + i, prefix + j});
                ++i;
                ++j;
            } else if (j < m && (i == n || L[i * w + j + 1] >= L[(i + 1) * w + j])) {
                // inserting keeps a[i] available for the earliest match
                middle.push_back({LineTag::insert, prefix + i, prefix + j});
                ++j;
            } else {
                middle.push_back({LineTag::remove, prefix + i, prefix + j});
                ++i;
            }
        }
    }
    // deletions first within each change run
    for (std::size_t k = 0; k < middle.size();) {
        if (middle[k].tag == LineTag::context) {
            ++k;
            continue;
        }
        std::size_t e = k;
        while (e < middle.size() && middle[e].tag != LineTag::context) {
            ++e;
        }
        std::stable_partition(middle.begin() + static_cast<std::ptrdiff_t>(k), middle.begin() + static_cast<std::ptrdiff_t>(e),
                              [](const Op& o) { return o.tag == LineTag::remove; });
        k = e;
    }
    ops.insert(ops.end(), middle.begin(), middle.end());
    // reordering leaves stale positions; the far side of a one-sided op is the next line there
    std::size_t ai = 0;
    std::size_t bj = 0;
    for (auto& o : ops) {
        o.a = ai;
        o.b = bj;
        ai += o.tag != LineTag::insert ? 1 : 0;
        bj += o.tag != LineTag::remove ? 1 : 0;
    }
    return ops;
}

std::size_t parse_number(std::string_view s, std::size_t& pos)
{
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
    if (ec != std::errc() || p == s.data() + pos) {
        throw DiffError(DiffError::Kind::parse, "malformed hunk header: " + std::string(s));
    }
    pos = static_cast<std::size_t>(p - s.data());
    return v;
}

void expect_char(std::string_view s, std::size_t& pos, char c)
{
    if (pos >= s.size() || s[pos] != c) {
        throw DiffError(DiffError::Kind::parse, "malformed hunk header: " + std::string(s));
    }
    ++pos;
}

} // namespace

std::string_view to_string(HunkState s)
{
    switch (s) {
    case HunkState::pending: return "pending";
    case HunkState::accepted: return "accepted";
    case HunkState::rejected: return "rejected";
    }
    return "pending";
}

HunkState hunk_state_from_string(std::string_view s)
{
    if (s == "pending") {
        return HunkState::pending;
    }
    if (s == "accepted") {
        return HunkState::accepted;
    }
    if (s == "rejected") {
        return HunkState::rejected;
    }
    throw Error("unknown hunk state: " + std::string(s));
}

DiffError::DiffError(Kind kind, std::string message, std::size_t hunk_id)
    : Error(std::move(message)), kind_(kind), hunk_id_(hunk_id)
{
}

void PatchSet::set_all(HunkState s)
{
    for (auto& h : hunks) {
        h.state = s;
    }
}

void PatchSet::set_state(std::size_t id, HunkState s)
{
    for (auto& h : hunks) {
        if (h.id == id) {
            h.state = s;
            return;
        }
    }
    throw DiffError(DiffError::Kind::inconsistent, "no hunk " + std::to_string(id), id);
}

std::size_t PatchSet::removed_lines() const
{
    std::size_t n = 0;
    for (const auto& h : hunks) {
        n += static_cast<std::size_t>(std::count_if(h.lines.begin(), h.lines.end(),
                                                    [](const HunkLine& l) { return l.tag == LineTag::remove; }));
    }
    return n;
}

std::size_t PatchSet::inserted_lines() const
{
    std::size_t n = 0;
    for (const auto& h : hunks) {
        n += static_cast<std::size_t>(std::count_if(h.lines.begin(), h.lines.end(),
                                                    [](const HunkLine& l) { return l.tag == LineTag::insert; }));
    }
    return n;
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
        out.push_back(text.substr(start, end - start));
        start = end;
    }
    return out;
}

PatchSet unified_diff(std::string_view a, std::string_view b, std::size_t context, std::string asset_id)
{
    PatchSet p;
    p.asset_id = std::move(asset_id);
    p.original_digest = sha256_hex(a);
    p.context_width = context;
    auto la = split_lines(a);
    auto lb = split_lines(b);
    auto ops = edit_script(la, lb);

    std::vector<std::size_t> changes;
    for (std::size_t k = 0; k < ops.size(); ++k) {
        if (ops[k].tag != LineTag::context) {
            changes.push_back(k);
        }
    }
    std::size_t c = 0;
    while (c < changes.size()) {
        // op range [lo, hi) of one hunk
        std::size_t first = changes[c];
        std::size_t last = first;
        ++c;
        while (c < changes.size() && changes[c] - last - 1 <= 2 * context) {
            last = changes[c];
            ++c;
        }
        std::size_t lo = first >= context ? first - context : 0;
        std::size_t hi = std::min(ops.size(), last + 1 + context);
        Hunk h;
        h.id = p.hunks.size() + 1;
        std::size_t old_first = ops[lo].a;
        std::size_t new_first = ops[lo].b;
        for (std::size_t k = lo; k < hi; ++k) {
            const Op& o = ops[k];
            switch (o.tag) {
            case LineTag::context:
                h.lines.push_back({LineTag::context, std::string(la[o.a])});
                ++h.old_len;
                ++h.new_len;
                break;
            case LineTag::remove:
                h.lines.push_back({LineTag::remove, std::string(la[o.a])});
                ++h.old_len;
                break;
            case LineTag::insert:
                h.lines.push_back({LineTag::insert, std::string(lb[o.b])});
                ++h.new_len;
                break;
            }
        }
        h.old_start = h.old_len == 0 ? old_first : old_first + 1;
        h.new_start = h.new_len == 0 ? new_first : new_first + 1;
        p.hunks.push_back(std::move(h));
    }
    return p;
}

ApplyResult apply_selected(std::string_view a, const PatchSet& p)
{
    if (sha256_hex(a) != p.original_digest) {
        throw DiffError(DiffError::Kind::stale_patch, "patch does not match the current text of " + p.asset_id);
    }
    auto la = split_lines(a);
    ApplyResult r;
    std::size_t cursor = 0; // next unconsumed line of a, 0-based
    for (const auto& h : p.hunks) {
        std::size_t begin = h.old_len == 0 ? h.old_start : h.old_start - 1;
        if ((h.old_len > 0 && h.old_start == 0) || begin < cursor || begin + h.old_len > la.size()) {
            throw DiffError(DiffError::Kind::inconsistent, "hunk " + std::to_string(h.id) + " is out of range", h.id);
        }
        for (; cursor < begin; ++cursor) {
            r.text.append(la[cursor]);
        }
        std::size_t k = begin;
        for (const auto& line : h.lines) {
            if (line.tag != LineTag::insert) {
                if (k >= la.size() || la[k] != line.text) {
                    throw DiffError(DiffError::Kind::inconsistent,
                                    "hunk " + std::to_string(h.id) + " does not match the text", h.id);
                }
                ++k;
            }
        }
        if (k != begin + h.old_len) {
            throw DiffError(DiffError::Kind::inconsistent, "hunk " + std::to_string(h.id) + " has a wrong length", h.id);
        }
        if (h.state == HunkState::pending) {
            r.pending.push_back(h.id);
        }
        bool take = h.state == HunkState::accepted;
        for (const auto& line : h.lines) {
            if (line.tag == LineTag::context || line.tag == (take ? LineTag::insert : LineTag::remove)) {
                r.text.append(line.text);
            }
        }
        cursor = k;
    }
    for (; cursor < la.size(); ++cursor) {
        r.text.append(la[cursor]);
    }
    return r;
}

std::string render_patch(const PatchSet& p)
{
    if (p.hunks.empty()) {
        return {};
    }
    std::string out = "--- a/" + p.asset_id + "\t" + p.original_digest + "\n+++ b/" + p.asset_id + "\n";
    for (const auto& h : p.hunks) {
        out += "@@ -" + std::to_string(h.old_start) + "," + std::to_string(h.old_len) + " +" + std::to_string(h.new_start)
            + "," + std::to_string(h.new_len) + " @@\n";
        for (const auto& line : h.lines) {
            out += line.tag == LineTag::context ? ' ' : line.tag == LineTag::remove ? '-' : '+';
            out += line.text;
            if (line.text.empty() || line.text.back() != '\n') {
                out += '\n';
                out += no_newline_marker;
                out += '\n';
            }
        }
    }
    return out;
}

PatchSet parse_patch(std::string_view text, std::size_t context)
{
    PatchSet p;
    p.context_width = context;
    if (text.empty()) {
        return p;
    }
    auto lines = split_lines(text);
    auto body = [](std::string_view l) {
        return l.substr(0, l.size() - (!l.empty() && l.back() == '\n' ? 1 : 0));
    };
    std::size_t k = 0;
    if (k < lines.size() && lines[k].starts_with("--- ")) {
        std::string_view h = body(lines[k]).substr(4);
        std::size_t tab = h.find('\t');
        std::string_view name = h.substr(0, tab);
        if (name.starts_with("a/")) {
            name.remove_prefix(2);
        }
        p.asset_id = std::string(name);
        if (tab != std::string_view::npos) {
            p.original_digest = std::string(h.substr(tab + 1));
        }
        ++k;
        if (k < lines.size() && lines[k].starts_with("+++ ")) {
            ++k;
        }
    }
    while (k < lines.size()) {
        std::string_view header = body(lines[k]);
        if (!header.starts_with("@@ -")) {
            throw DiffError(DiffError::Kind::parse, "expected hunk header: " + std::string(header));
        }
        Hunk h;
        h.id = p.hunks.size() + 1;
        std::size_t pos = 4;
        h.old_start = parse_number(header, pos);
        expect_char(header, pos, ',');
        h.old_len = parse_number(header, pos);
        expect_char(header, pos, ' ');
        expect_char(header, pos, '+');
        h.new_start = parse_number(header, pos);
        expect_char(header, pos, ',');
        h.new_len = parse_number(header, pos);
        if (header.substr(pos, 3) != " @@") {
            throw DiffError(DiffError::Kind::parse, "malformed hunk header: " + std::string(header));
        }
        ++k;
        std::size_t old_seen = 0;
        std::size_t new_seen = 0;
        while (k < lines.size() && (old_seen < h.old_len || new_seen < h.new_len)) {
            std::string_view l = lines[k];
            if (l.empty() || l.back() != '\n') {
                throw DiffError(DiffError::Kind::parse, "truncated patch");
            }
            char tag = l[0];
            std::string t(l.substr(1));
            if (k + 1 < lines.size() && body(lines[k + 1]) == no_newline_marker) {
                t.pop_back();
                ++k;
            }
            ++k;
            if (tag == ' ') {
                h.lines.push_back({LineTag::context, std::move(t)});
                ++old_seen;
                ++new_seen;
            } else if (tag == '-') {
                h.lines.push_back({LineTag::remove, std::move(t)});
                ++old_seen;
            } else if (tag == '+') {
                h.lines.push_back({LineTag::insert, std::move(t)});
                ++new_seen;
            } else {
                throw DiffError(DiffError::Kind::parse, "unexpected line in hunk " + std::to_string(h.id), h.id);
            }
        }
        if (old_seen != h.old_len || new_seen != h.new_len) {
            throw DiffError(DiffError::Kind::parse, "hunk " + std::to_string(h.id) + " line counts differ from header", h.id);
        }
        p.hunks.push_back(std::move(h));
    }
    return p;
}

} // namespace wattless
