#pragma once

#include "wattless/util.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace wattless {

enum class LineTag { context, remove, insert };
enum class HunkState { pending, accepted, rejected };

std::string_view to_string(HunkState s);
HunkState hunk_state_from_string(std::string_view s);

struct HunkLine {
    LineTag tag = LineTag::context;
    /// Line text including its terminator; only a final line may lack one.
    std::string text;

    friend bool operator==(const HunkLine&, const HunkLine&) = default;
};

/// Line coordinates are 1-based; a zero-length side starts at the line
/// preceding the change (0 at the start of the text).
struct Hunk {
    std::size_t id = 0; // 1-based position within the patch set
    std::size_t old_start = 0;
    std::size_t old_len = 0;
    std::size_t new_start = 0;
    std::size_t new_len = 0;
    std::vector<HunkLine> lines;
    HunkState state = HunkState::pending;

    friend bool operator==(const Hunk&, const Hunk&) = default;
};

struct PatchSet {
    std::string asset_id;
    std::string original_digest; // sha256_hex of the original text
    std::vector<Hunk> hunks;
    std::size_t context_width = 3;

    friend bool operator==(const PatchSet&, const PatchSet&) = default;

    void set_all(HunkState s);
    /// Throws DiffError when no hunk has this id.
    void set_state(std::size_t id, HunkState s);
    std::size_t removed_lines() const;
    std::size_t inserted_lines() const;
};

class DiffError : public Error {
public:
    enum class Kind { stale_patch, inconsistent, parse };
    DiffError(Kind kind, std::string message, std::size_t hunk_id = 0);
    Kind kind() const { return kind_; }
    std::size_t hunk_id() const { return hunk_id_; }

private:
    Kind kind_;
    std::size_t hunk_id_;
};

/// Splits after every '\n'; the last piece may lack a terminator.
std::vector<std::string_view> split_lines(std::string_view text);

/// Line table cells above which the diff degrades to one full-replacement hunk.
inline constexpr std::size_t max_lcs_cells = 16'000'000;

/// LCS line diff. On equal choices the earliest line of `a` is matched;
/// within a change run deletions precede insertions. Change runs whose
/// context regions touch share a hunk.
PatchSet unified_diff(std::string_view a, std::string_view b, std::size_t context = 3, std::string asset_id = {});

struct ApplyResult {
    std::string text;
    /// Hunks that were still pending and were therefore left unapplied.
    std::vector<std::size_t> pending;
};

/// Applies accepted hunks; rejected and pending hunks keep the original.
/// Throws DiffError(stale_patch) when `a` does not hash to original_digest,
/// and DiffError(inconsistent) when a hunk does not fit the text.
ApplyResult apply_selected(std::string_view a, const PatchSet& p);

/// Standard unified-diff text. File headers carry the asset id and, after a
/// tab, the original digest, so parse_patch(render_patch(p)) == p for
/// non-empty patches whose hunks are pending. An empty patch renders empty. Lines without a terminator are followed
/// by the `\ No newline at end of file` marker.
std::string render_patch(const PatchSet& p);
PatchSet parse_patch(std::string_view text, std::size_t context = 3);

} // namespace wattless
