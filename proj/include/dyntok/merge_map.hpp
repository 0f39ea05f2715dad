#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dyntok/token_matrix.hpp"

namespace dyntok {

// Multiplicity of each kept token, i.e. how many original positions it stands for.
using SizeVector = std::vector<std::size_t>;

// Partition of full-sequence positions 0..n_full-1 into groups, one group per
// kept (unique) token. Equivalent to a one-hot n_full x n_unique assignment
// matrix, stored as position lists. Groups are ordered by their smallest
// member and members are sorted ascending; the constructor normalizes input
// to that form and rejects anything that is not a partition.
class MergeMap {
public:
    MergeMap(std::size_t n_full, std::vector<std::vector<std::size_t>> groups);

    static MergeMap identity(std::size_t n);

    std::size_t n_full() const { return n_full_; }
    std::size_t group_count() const { return groups_.size(); }
    const std::vector<std::size_t>& group(std::size_t j) const { return groups_[j]; }
    const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }

    // Index of the group containing full position p.
    std::size_t group_of(std::size_t p) const;

    SizeVector sizes() const;

    bool operator==(const MergeMap& o) const {
        return n_full_ == o.n_full_ && groups_ == o.groups_;
    }

private:
    std::size_t n_full_ = 0;
    std::vector<std::vector<std::size_t>> groups_;
    std::vector<std::size_t> group_of_;
};

MergeMap merge_map_identity(std::size_t n);

// Replicate unique rows back to full positions: out[p] = e_un[group_of(p)].
TokenMatrix expand(const MergeMap& map, const TokenMatrix& e_un);

// Average full rows group-wise: out[j] = mean over p in group j of y[p].
TokenMatrix remerge_average(const MergeMap& map, const TokenMatrix& y);

// Composition: `inner` maps full -> mid, `outer` maps mid -> final.
// Result maps full -> final. Requires outer.n_full() == inner.group_count().
MergeMap compose(const MergeMap& outer, const MergeMap& inner);

SizeVector sizes(const MergeMap& map);

// JSON form: {"n_full": int, "groups": [[int,...],...]}, groups and members
// in the canonical sorted order.
std::string merge_map_to_json_text(const MergeMap& map);
MergeMap merge_map_from_json_text(const std::string& text);

} // namespace dyntok
