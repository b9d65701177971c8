#pragma once

#include "nwr/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nwr {

struct EquivClass {
    std::vector<StateId> members;  ///< ascending
    /// The member with successors outside the class; set for classes with several members.
    std::optional<StateId> exit;
};

struct EquivPartition {
    std::vector<EquivClass> classes;  ///< ordered by smallest member
    std::vector<std::size_t> class_of;
    /// Departures from the expected shape (a class without a unique exit, or whose
    /// members do not share exactly one almost surely reached state). Empty normally.
    std::vector<std::string> diagnostics;
};

/// NWR equivalence classes of a trivially parametric Markov chain with targets fin and
/// fail only, after extremal contraction. Self-loops are dropped and single-successor
/// states folded into their successor; then u and w are equivalent iff some state is
/// almost surely reached from both. Throws ModelError on multi-action states or states
/// of value 0 or 1 other than fin and fail.
EquivPartition mc_equiv_classes(WpMdp const& mc);

/// Replaces every class by its exit: the other members and their choices disappear and
/// their predecessors move to the exit. The map sends each state to its class.
std::pair<WpMdp, ModelMap> mc_collapse(WpMdp const& mc, EquivPartition const& partition);

}  // namespace nwr
