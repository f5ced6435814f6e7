#pragma once

#include <cstdint>
#include <vector>

#include "cfisurface/facts.hpp"
#include "cfisurface/policy.hpp"

namespace cfisurface {

/// Reference evaluator for differential testing. Every query enumerates all
/// functions or all vtables of the program and re-derives matches from the
/// raw records; no code is shared with PolicyEngine's evaluation path. The
/// only state kept across queries is the base lists decoded to indices and
/// the island label of each virtual class, found by fixpoint iteration over
/// the classes named in each table's base_path.
class TargetOracle {
 public:
  /// `facts` must be validated and must outlive the oracle.
  explicit TargetOracle(const ProgramFacts& facts, PolicyOptions options = {});

  /// Same contract and errors as PolicyEngine::evaluate.
  TargetSet targets(PolicyId policy, const Callsite& cs) const;

 private:
  std::vector<std::uint32_t> bin_types(const Callsite& cs) const;
  std::vector<std::uint32_t> by_parameters(const Callsite& cs, bool pointers_interchange) const;
  std::vector<std::uint32_t> strict_src_types(const Callsite& cs) const;
  std::vector<std::uint32_t> all_vtables() const;
  std::vector<std::uint32_t> vtable_island(const Callsite& cs) const;
  std::vector<std::uint32_t> sub_hierarchy(const Callsite& cs) const;
  std::vector<std::uint32_t> strict_sub_hierarchy(const Callsite& cs) const;

  void require_virtual(PolicyId policy, const Callsite& cs) const;
  bool derives_from(std::size_t derived, std::size_t base, std::vector<signed char>& memo) const;

  const ProgramFacts* facts_;
  PolicyOptions options_;
  std::vector<std::vector<std::size_t>> bases_;
  std::vector<std::size_t> island_label_;  // per class
};

/// One-shot form of TargetOracle::targets.
TargetSet oracle_targets(const ProgramFacts& facts, PolicyId policy, const Callsite& cs,
                         PolicyOptions options = {});

}  // namespace cfisurface
