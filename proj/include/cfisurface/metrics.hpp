#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfisurface/facts.hpp"
#include "cfisurface/policy.hpp"

namespace cfisurface {

/// A percentage held as an exact count of hundredths.
struct Percent {
  std::int64_t hundredths = 0;

  /// Always two decimals, e.g. "59.72", "100.00".
  std::string str() const;
  double value() const noexcept { return static_cast<double>(hundredths) / 100.0; }
  /// Accepts "55.1", "0.15", "7" and the like; more than two decimals are
  /// rounded half-up. Throws std::invalid_argument.
  static Percent parse(std::string_view text);

  friend auto operator<=>(const Percent&, const Percent&) = default;
};

/// Per-site counts plus their summary statistics.
struct Distribution {
  std::vector<std::uint64_t> values;
  std::uint64_t total = 0;
  std::uint64_t min = 0;
  std::uint64_t max = 0;
  /// Lower middle element for even n.
  std::uint64_t median = 0;
  /// The ceil(0.9 n)-th smallest value.
  std::uint64_t p90 = 0;
  /// Population standard deviation.
  double sd = 0.0;

  std::size_t n() const noexcept { return values.size(); }
  double average() const noexcept;
  /// Average rounded half-up to an integer.
  std::uint64_t average_rounded() const noexcept;
  /// n * sum(x^2) - sum(x)^2; the population variance is this over n^2.
  unsigned __int128 variance_numerator() const noexcept;
};

Distribution make_distribution(std::vector<std::uint64_t> values);

/// 100 * value / baseline, rounded half-up to two decimals. Throws
/// ZeroBaselineError.
Percent normalize(std::uint64_t value, std::uint64_t baseline);
/// 100 * (numerator / denominator) / baseline, exactly.
Percent normalize_ratio(std::uint64_t numerator, std::uint64_t denominator, std::uint64_t baseline);
Percent normalize_real(double value, std::uint64_t baseline);

struct NormalizedDistribution {
  Percent min, p90, max, median, average, sd;
};

NormalizedDistribution normalize(const Distribution& d, std::uint64_t baseline);

/// CTR: sizes of the given target sets, in the order given.
Distribution ctr(std::span<const TargetSet> target_sets);

/// Callsite -> target relation transposed onto return sites (one per
/// non-pure function). Sets shared between callsites are visited once.
class ReturnRelation {
 public:
  ReturnRelation(const ProgramFacts& facts, std::span<const TargetSet> forward);

  /// Function indices with a return site, ascending.
  std::span<const std::uint32_t> return_sites() const noexcept { return sites_; }
  /// Callsites (indirect, then direct) that may be returned to from `site`.
  std::uint64_t return_targets(std::uint32_t function) const { return counts_[function]; }
  /// Of those, the ones inside a function flagged with a return gadget.
  std::vector<std::uint64_t> gadget_return_targets(const GadgetAnnotations& gadgets) const;

 private:
  struct Group {
    const MemberList* members;
    std::vector<std::size_t> callsites;  // indices into facts.callsites()
  };

  const ProgramFacts* facts_;
  std::vector<std::uint32_t> sites_;
  std::vector<std::uint64_t> counts_;
  std::vector<Group> groups_;
};

/// RTR over the return sites of `relation`, ordered by function id.
Distribution rtr(const ReturnRelation& relation);

std::uint64_t fcga(std::span<const TargetSet> target_sets, const ProgramFacts& facts,
                   const GadgetAnnotations& gadgets);
std::uint64_t bcga(const ReturnRelation& relation, const GadgetAnnotations& gadgets);

struct RankInput {
  PolicyId policy;
  Percent average;
  Percent p90;
  Percent sd;
};

struct Ranking {
  std::vector<PolicyId> order;
  /// One line per adjacent pair explaining which key separated them.
  std::vector<std::string> trace;
};

/// Ascending by average, then 90th percentile, then SD, then policy order.
Ranking rank(std::vector<RankInput> aggregates);

}  // namespace cfisurface
