#pragma once

#include "wattless/diffpatch.hpp"
#include "wattless/util.hpp"

#include <random>
#include <string>
#include <vector>

namespace wattless::testing {

inline std::string random_text(std::mt19937& rng, std::size_t max_lines = 200)
{
    static const char* alphabet[] = {"a", "b", "c", "d", "", "e f"};
    std::size_t n = rng() % (max_lines + 1);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += alphabet[rng() % 6];
        s += '\n';
    }
    if (!s.empty() && rng() % 4 == 0) {
        s.pop_back();
    }
    return s;
}

inline std::string mutate(const std::string& a, std::mt19937& rng)
{
    auto lines = split_lines(a);
    std::vector<std::string> out(lines.begin(), lines.end());
    if (!out.empty() && out.back().back() != '\n') {
        out.back() += '\n';
    }
    std::size_t edits = 1 + rng() % 6;
    for (std::size_t e = 0; e < edits; ++e) {
        std::size_t pos = out.empty() ? 0 : rng() % (out.size() + 1);
        switch (rng() % 3) {
        case 0: out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), "new " + std::to_string(rng() % 5) + "\n"); break;
        case 1:
            if (pos < out.size()) {
                out.erase(out.begin() + static_cast<std::ptrdiff_t>(pos));
            }
            break;
        default:
            if (pos < out.size()) {
                out[pos] = "changed\n";
            }
        }
    }
    std::string s;
    for (const auto& l : out) {
        s += l;
    }
    if (!s.empty() && rng() % 4 == 0) {
        s.pop_back();
    }
    return s;
}

/// Forward-table LCS length, independent of the diff's suffix table.
inline std::size_t lcs_length(const std::vector<std::string_view>& a, const std::vector<std::string_view>& b)
{
    std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
        }
    }
    return t[a.size()][b.size()];
}

inline std::string apply_all(std::string_view a, PatchSet p, HunkState s)
{
    p.set_all(s);
    return apply_selected(a, p).text;
}

/// Ids 1..n, line counts match headers, hunks ordered and disjoint.
inline bool hunks_well_formed(const PatchSet& p)
{
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < p.hunks.size(); ++i) {
        const auto& h = p.hunks[i];
        std::size_t old_len = 0;
        std::size_t new_len = 0;
        for (const auto& l : h.lines) {
            old_len += l.tag != LineTag::insert;
            new_len += l.tag != LineTag::remove;
        }
        std::size_t begin = h.old_len == 0 ? h.old_start : h.old_start - 1;
        if (h.id != i + 1 || old_len != h.old_len || new_len != h.new_len || begin < prev_end) {
            return false;
        }
        prev_end = begin + h.old_len;
    }
    return true;
}

/// Each returned string describes one failing case; empty means the property holds.
using Violations = std::vector<std::string>;

/// Accept-all reaches the target, reject-all the source, with a minimal edit count.
inline Violations roundtrip_violations(int pairs, unsigned seed = 20240601)
{
    Violations out;
    std::mt19937 rng(seed);
    for (int i = 0; i < pairs; ++i) {
        std::string a = random_text(rng);
        std::string b = i % 2 ? random_text(rng) : mutate(a, rng);
        auto p = unified_diff(a, b, static_cast<std::size_t>(i % 5), "f");
        auto la = split_lines(a);
        auto lb = split_lines(b);
        std::size_t lcs = lcs_length(la, lb);
        std::string tag = "pair " + std::to_string(i) + ": ";
        if (!hunks_well_formed(p)) {
            out.push_back(tag + "malformed hunks");
        }
        if (apply_all(a, p, HunkState::accepted) != b) {
            out.push_back(tag + "accept-all differs from target");
        }
        if (apply_all(a, p, HunkState::rejected) != a) {
            out.push_back(tag + "reject-all differs from source");
        }
        if (p.removed_lines() + p.inserted_lines() != la.size() + lb.size() - 2 * lcs) {
            out.push_back(tag + "edit count is not minimal");
        }
        if (p.hunks.empty() != (a == b)) {
            out.push_back(tag + "hunk presence disagrees with equality");
        }
    }
    return out;
}

/// parse_patch(render_patch(p)) == p for non-empty patches.
inline Violations render_parse_violations(int cases, unsigned seed = 7)
{
    Violations out;
    std::mt19937 rng(seed);
    for (int i = 0; i < cases; ++i) {
        std::string a = random_text(rng);
        std::string b = mutate(a, rng);
        auto p = unified_diff(a, b, 3, "dir/file.css");
        auto q = parse_patch(render_patch(p));
        if (p.hunks.empty() ? !q.hunks.empty() : (q != p || render_patch(q) != render_patch(p))) {
            out.push_back("case " + std::to_string(i) + ": roundtrip mismatch");
        }
    }
    return out;
}

/// Applying a random subset at once equals applying its hunks one by one.
/// `multi_hunk` counts cases with more than one hunk.
inline Violations composability_violations(int cases, int& multi_hunk, unsigned seed = 11)
{
    Violations out;
    std::mt19937 rng(seed);
    multi_hunk = 0;
    for (int i = 0; i < cases; ++i) {
        std::string a = random_text(rng, 120);
        std::string b = mutate(mutate(a, rng), rng);
        auto p = unified_diff(a, b, 1);
        multi_hunk += p.hunks.size() > 1;
        std::vector<bool> pick(p.hunks.size());
        for (std::size_t k = 0; k < pick.size(); ++k) {
            pick[k] = rng() % 2;
            p.hunks[k].state = pick[k] ? HunkState::accepted : HunkState::rejected;
        }
        auto together = apply_selected(a, p).text;

        // one hunk at a time on the evolving text, shifted by earlier growth
        std::string cur = a;
        std::ptrdiff_t shift = 0;
        for (std::size_t k = 0; k < pick.size(); ++k) {
            if (!pick[k]) {
                continue;
            }
            PatchSet single;
            single.original_digest = sha256_hex(cur);
            Hunk h = p.hunks[k];
            h.id = 1;
            h.old_start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(h.old_start) + shift);
            h.state = HunkState::accepted;
            shift += static_cast<std::ptrdiff_t>(h.new_len) - static_cast<std::ptrdiff_t>(h.old_len);
            single.hunks.push_back(h);
            cur = apply_selected(cur, single).text;
        }
        if (together != cur) {
            out.push_back("case " + std::to_string(i) + ": subset application differs");
        }
    }
    return out;
}

} // namespace wattless::testing
