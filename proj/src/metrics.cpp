#include "cfisurface/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "cfisurface/error.hpp"

namespace cfisurface {
namespace {

using u128 = unsigned __int128;

/// floor(num / den + 1/2) for den > 0.
std::int64_t round_half_up(u128 num, u128 den) {
  return static_cast<std::int64_t>((2 * num + den) / (2 * den));
}

void require_baseline(std::uint64_t baseline) {
  if (baseline == 0) throw ZeroBaselineError("cannot normalize against a zero baseline");
}

std::string compare_line(const RankInput& a, const RankInput& b) {
  std::string head = std::string(policy_name(a.policy)) + " before " + std::string(policy_name(b.policy)) + ": ";
  if (a.average != b.average) return head + "avg " + a.average.str() + " < " + b.average.str();
  head += "avg tie at " + a.average.str() + ", ";
  if (a.p90 != b.p90) return head + "90p " + a.p90.str() + " < " + b.p90.str();
  head += "90p tie at " + a.p90.str() + ", ";
  if (a.sd != b.sd) return head + "SD " + a.sd.str() + " < " + b.sd.str();
  return head + "SD tie at " + a.sd.str() + ", enumeration order";
}

}  // namespace

std::string Percent::str() const {
  const bool negative = hundredths < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-hundredths) : static_cast<std::uint64_t>(hundredths);
  std::string frac = std::to_string(mag % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (negative ? "-" : "") + std::to_string(mag / 100) + "." + frac;
}

Percent Percent::parse(std::string_view text) {
  const std::string original(text);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  auto digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (whole.empty() || !digits(whole) || !digits(frac) || whole.size() > 15 ||
      (dot != std::string_view::npos && frac.empty())) {
    throw std::invalid_argument("not a decimal percentage: '" + original + "'");
  }
  std::int64_t value = std::stoll(std::string(whole)) * 100;
  std::int64_t fraction = 0;
  for (std::size_t i = 0; i < 2; ++i) fraction = fraction * 10 + (i < frac.size() ? frac[i] - '0' : 0);
  value += fraction;
  if (frac.size() > 2 && frac[2] >= '5') ++value;
  return {negative ? -value : value};
}

double Distribution::average() const noexcept {
  return values.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(values.size());
}

std::uint64_t Distribution::average_rounded() const noexcept {
  if (values.empty()) return 0;
  return static_cast<std::uint64_t>(round_half_up(total, values.size()));
}

unsigned __int128 Distribution::variance_numerator() const noexcept {
  u128 sum = 0;
  u128 sum_sq = 0;
  for (auto v : values) {
    sum += v;
    sum_sq += static_cast<u128>(v) * v;
  }
  return static_cast<u128>(values.size()) * sum_sq - sum * sum;
}

Distribution make_distribution(std::vector<std::uint64_t> values) {
  Distribution d;
  d.values = std::move(values);
  if (d.values.empty()) return d;
  std::vector<std::uint64_t> sorted = d.values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  for (auto v : sorted) d.total += v;
  d.min = sorted.front();
  d.max = sorted.back();
  d.median = sorted[(n - 1) / 2];
  d.p90 = sorted[(9 * n + 9) / 10 - 1];
  d.sd = static_cast<double>(std::sqrt(static_cast<long double>(d.variance_numerator())) /
                             static_cast<long double>(n));
  return d;
}

Percent normalize(std::uint64_t value, std::uint64_t baseline) {
  require_baseline(baseline);
  return {round_half_up(static_cast<u128>(value) * 10000, baseline)};
}

Percent normalize_ratio(std::uint64_t numerator, std::uint64_t denominator, std::uint64_t baseline) {
  require_baseline(baseline);
  if (denominator == 0) throw std::invalid_argument("zero denominator");
  return {round_half_up(static_cast<u128>(numerator) * 10000, static_cast<u128>(denominator) * baseline)};
}

Percent normalize_real(double value, std::uint64_t baseline) {
  require_baseline(baseline);
  const long double scaled = static_cast<long double>(value) * 10000.0L / static_cast<long double>(baseline);
  return {static_cast<std::int64_t>(std::floor(scaled + 0.5L))};
}

NormalizedDistribution normalize(const Distribution& d, std::uint64_t baseline) {
  require_baseline(baseline);
  NormalizedDistribution out;
  if (d.n() == 0) return out;
  out.min = normalize(d.min, baseline);
  out.p90 = normalize(d.p90, baseline);
  out.max = normalize(d.max, baseline);
  out.median = normalize(d.median, baseline);
  out.average = normalize_ratio(d.total, d.n(), baseline);
  out.sd = normalize_real(d.sd, baseline);
  return out;
}

Distribution ctr(std::span<const TargetSet> target_sets) {
  std::vector<std::uint64_t> sizes;
  sizes.reserve(target_sets.size());
  for (const auto& t : target_sets) sizes.push_back(t.size());
  return make_distribution(std::move(sizes));
}

ReturnRelation::ReturnRelation(const ProgramFacts& facts, std::span<const TargetSet> forward)
    : facts_(&facts), counts_(facts.functions().size(), 0) {
  const auto functions = facts.functions();
  for (std::uint32_t f = 0; f < functions.size(); ++f) {
    if (!functions[f].is_pure_virtual) sites_.push_back(f);
  }
  std::unordered_map<const MemberList*, std::size_t> group_of;
  for (const auto& t : forward) {
    if (!t.members) continue;
    auto cs = facts.callsite_index(t.callsite_id);
    if (!cs) throw std::invalid_argument("target set for unknown callsite " + t.callsite_id);
    auto [it, inserted] = group_of.try_emplace(t.members.get(), groups_.size());
    if (inserted) groups_.push_back({t.members.get(), {}});
    groups_[it->second].callsites.push_back(*cs);
  }
  for (const auto& g : groups_) {
    for (auto f : *g.members) counts_[f] += g.callsites.size();
  }
  for (std::uint32_t f = 0; f < functions.size(); ++f) counts_[f] += functions[f].direct_callers.size();
}

std::vector<std::uint64_t> ReturnRelation::gadget_return_targets(const GadgetAnnotations& gadgets) const {
  const auto functions = facts_->functions();
  const auto callsites = facts_->callsites();
  std::vector<std::uint64_t> per_function(functions.size(), 0);
  for (const auto& g : groups_) {
    std::uint64_t flagged = 0;
    for (auto cs : g.callsites) {
      const auto& enclosing = callsites[cs].enclosing_function;
      if (enclosing && gadgets.lookup(*enclosing).has_return_gadget) ++flagged;
    }
    if (flagged == 0) continue;
    for (auto f : *g.members) per_function[f] += flagged;
  }
  for (std::uint32_t f = 0; f < functions.size(); ++f) {
    for (const auto& caller : functions[f].direct_callers) {
      if (gadgets.lookup(caller).has_return_gadget) ++per_function[f];
    }
  }
  std::vector<std::uint64_t> out;
  out.reserve(sites_.size());
  for (auto f : sites_) out.push_back(per_function[f]);
  return out;
}

Distribution rtr(const ReturnRelation& relation) {
  std::vector<std::uint64_t> values;
  values.reserve(relation.return_sites().size());
  for (auto f : relation.return_sites()) values.push_back(relation.return_targets(f));
  return make_distribution(std::move(values));
}

std::uint64_t fcga(std::span<const TargetSet> target_sets, const ProgramFacts& facts,
                   const GadgetAnnotations& gadgets) {
  if (gadgets.empty()) return 0;
  std::unordered_map<const MemberList*, std::uint64_t> per_set;
  std::uint64_t total = 0;
  for (const auto& t : target_sets) {
    if (!t.members) continue;
    auto [it, inserted] = per_set.try_emplace(t.members.get(), 0);
    if (inserted) {
      for (auto f : *t.members) {
        if (gadgets.lookup(facts.functions()[f].id).has_forward_gadget) ++it->second;
      }
    }
    total += it->second;
  }
  return total;
}

std::uint64_t bcga(const ReturnRelation& relation, const GadgetAnnotations& gadgets) {
  std::uint64_t total = 0;
  for (auto v : relation.gadget_return_targets(gadgets)) total += v;
  return total;
}

Ranking rank(std::vector<RankInput> aggregates) {
  std::stable_sort(aggregates.begin(), aggregates.end(), [](const RankInput& a, const RankInput& b) {
    if (a.average != b.average) return a.average < b.average;
    if (a.p90 != b.p90) return a.p90 < b.p90;
    if (a.sd != b.sd) return a.sd < b.sd;
    return a.policy < b.policy;
  });
  Ranking out;
  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    out.order.push_back(aggregates[i].policy);
    if (i > 0) out.trace.push_back(compare_line(aggregates[i - 1], aggregates[i]));
  }
  return out;
}

}  // namespace cfisurface
