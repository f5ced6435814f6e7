#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "builder.hpp"
#include "cfisurface/error.hpp"
#include "cfisurface/generator.hpp"
#include "cfisurface/hierarchy.hpp"
#include "cfisurface/metrics.hpp"
#include "cfisurface/oracle.hpp"

using namespace cfisurface;
using testing::Builder;

namespace {

std::vector<TargetSet> evaluate_all(const ProgramFacts& f, PolicyId p) {
  const PolicyEngine engine(f);
  std::vector<TargetSet> out;
  for (const auto& cs : f.callsites()) {
    if (engine.applicable(p, cs)) out.push_back(engine.evaluate(p, cs));
  }
  return out;
}

Percent pct(const char* s) { return Percent::parse(s); }

}  // namespace

TEST_CASE("distribution aggregates") {
  const auto flat = make_distribution({5, 5, 5});
  CHECK(flat.total == 15);
  CHECK(flat.sd == 0.0);
  CHECK(flat.p90 == 5);
  CHECK(flat.median == 5);

  const auto ramp = make_distribution({10, 9, 8, 7, 6, 5, 4, 3, 2, 1});
  CHECK(ramp.p90 == 9);
  CHECK(ramp.min == 1);
  CHECK(ramp.max == 10);
  CHECK(ramp.median == 5);
  CHECK(ramp.average() == doctest::Approx(5.5));
  CHECK(ramp.average_rounded() == 6);
  CHECK(ramp.sd == doctest::Approx(std::sqrt(8.25)));
  CHECK(ramp.values.front() == 10);

  const auto none = make_distribution({});
  CHECK(none.n() == 0);
  CHECK(none.total == 0);
  CHECK(none.sd == 0.0);
}

TEST_CASE("percent formatting and parsing") {
  CHECK(pct("55.1").hundredths == 5510);
  CHECK(pct("0.15").str() == "0.15");
  CHECK(pct("7").str() == "7.00");
  CHECK(pct("1.005").hundredths == 101);
  CHECK_THROWS_AS(pct("x"), std::invalid_argument);
  CHECK_THROWS_AS(pct(""), std::invalid_argument);
}

TEST_CASE("normalize rounds half up to two decimals") {
  CHECK(normalize(19395, 32478).str() == "59.72");
  CHECK(normalize(30179, 32478).str() == "92.92");
  CHECK(normalize(6128, 6300).str() == "97.27");
  CHECK(normalize(2406, 32478).str() == "7.41");
  CHECK(normalize(6300, 6300).str() == "100.00");
  CHECK(normalize(1, 8).str() == "12.50");
  CHECK(normalize(1, 800).str() == "0.13");
  CHECK_THROWS_AS(normalize(1, 0), ZeroBaselineError);
  for (std::uint64_t k : {2, 3, 17}) CHECK(normalize(k * 19395, k * 32478) == normalize(19395, 32478));
  CHECK(normalize_ratio(11, 2, 10).str() == "55.00");
}

TEST_CASE("ctr under all vtables is the distinct virtual target count everywhere") {
  const auto f = generate_corpus({.seed = 7, .n_classes = 50, .max_bases = 2, .p_pure = 0.1});
  std::set<std::string> distinct;
  for (const auto& t : f.vtables()) {
    for (const auto& e : t.entries) {
      if (e.function_id) distinct.insert(*e.function_id);
    }
  }
  const auto d = ctr(evaluate_all(f, PolicyId::kAllVtables));
  REQUIRE(d.n() > 0);
  for (auto v : d.values) CHECK(v == distinct.size());
  CHECK(d.sd == 0.0);
}

TEST_CASE("return targets of a single callsite") {
  Builder b;
  b.func("f", "f", {"i32"}).func("g", "g", {}).func("h", "h", {"i64"});
  b.pcall("S1", {"i32"}, false, std::nullopt, "g");
  const auto f = b.build();
  const auto sets = evaluate_all(f, PolicyId::kSrcTypes);
  const ReturnRelation rel(f, sets);
  CHECK(rel.return_targets(*f.function_index("f")) == 1);
  CHECK(rel.return_targets(*f.function_index("g")) == 0);
  CHECK(rel.return_targets(*f.function_index("h")) == 0);
  const auto d = rtr(rel);
  CHECK(d.total == 1);
  CHECK(d.n() == 3);

  GadgetAnnotations gadgets;
  CHECK(bcga(rel, gadgets) == 0);
  gadgets.set("g", {false, true});
  CHECK(bcga(rel, gadgets) == 1);
}

TEST_CASE("rtr is the transpose of the callsite relation plus direct calls") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 30; ++i) {
    const auto f = generate_corpus({.seed = rng(), .n_classes = 20, .n_callsites = 60, .p_pure = 0.1,
                                    .n_direct_calls = 25});
    for (auto p : {PolicyId::kBinTypes, PolicyId::kSrcTypes, PolicyId::kSubHierarchy}) {
      const auto sets = evaluate_all(f, p);
      std::map<std::string, std::uint64_t> expected;
      for (const auto& t : sets) {
        for (const auto& id : t.member_ids(f)) ++expected[id];
      }
      for (const auto& fn : f.functions()) expected[fn.id] += fn.direct_callers.size();
      const ReturnRelation rel(f, sets);
      std::vector<std::uint64_t> want;
      for (const auto& fn : f.functions()) {
        if (!fn.is_pure_virtual) want.push_back(expected[fn.id]);
      }
      CHECK(rtr(rel).values == want);

      GadgetAnnotations all;
      for (const auto& fn : f.functions()) all.set(fn.id, {true, true});
      CHECK(fcga(sets, f, all) == ctr(sets).total);
      std::uint64_t attributed = 0;
      for (const auto& t : sets) {
        if (f.find_callsite(t.callsite_id)->enclosing_function) attributed += t.size();
      }
      for (const auto& fn : f.functions()) {
        if (!fn.is_pure_virtual) attributed += fn.direct_callers.size();
      }
      CHECK(bcga(rel, all) == attributed);
    }
  }
}

TEST_CASE("forward gadget availability") {
  Builder b;
  b.func("f", "f", {"i32"}).func("g", "g", {"i32"});
  b.pcall("S1", {"i32"});
  const auto f = b.build();
  const auto sets = evaluate_all(f, PolicyId::kSrcTypes);
  GadgetAnnotations g;
  CHECK(fcga(sets, f, g) == 0);
  g.set("f", {true, false});
  g.set("g", {false, true});
  CHECK(fcga(sets, f, g) == 1);
}

TEST_CASE("ranking sorts by average with a traced tie-break") {
  const std::vector<RankInput> table{
      {PolicyId::kBinTypes, pct("55.1"), pct("81.8"), pct("18.62")},
      {PolicyId::kSafeSrcTypes, pct("11.66"), pct("22.19"), pct("9.12")},
      {PolicyId::kSrcTypes, pct("11.3"), pct("22.19"), pct("9.22")},
      {PolicyId::kStrictSrcTypes, pct("0.15"), pct("0.61"), pct("0.25")},
      {PolicyId::kAllVtables, pct("94.35"), pct("94.35"), pct("0.0")},
      {PolicyId::kVtableIsland, pct("0.53"), pct("1.79"), pct("0.77")},
      {PolicyId::kSubHierarchy, pct("0.17"), pct("0.34"), pct("0.46")},
      {PolicyId::kStrictSubHierarchy, pct("0.17"), pct("0.33"), pct("0.46")},
  };
  const auto r = rank(table);
  CHECK(r.order == std::vector{PolicyId::kStrictSrcTypes, PolicyId::kStrictSubHierarchy, PolicyId::kSubHierarchy,
                               PolicyId::kVtableIsland, PolicyId::kSrcTypes, PolicyId::kSafeSrcTypes,
                               PolicyId::kBinTypes, PolicyId::kAllVtables});
  REQUIRE(r.trace.size() == 7);
  CHECK(r.trace[1] == "StrictSubHierarchy before SubHierarchy: avg tie at 0.17, 90p 0.33 < 0.34");

  // Scaling all aggregates leaves the order alone.
  auto scaled = table;
  for (auto& in : scaled) {
    in.average.hundredths *= 3;
    in.p90.hundredths *= 3;
    in.sd.hundredths *= 3;
  }
  CHECK(rank(scaled).order == r.order);

  CHECK(rank({table[4]}).order == std::vector{PolicyId::kAllVtables});
  CHECK(rank({table[4]}).trace.empty());

  std::vector<RankInput> equal;
  for (auto it = kAllPolicies.rbegin(); it != kAllPolicies.rend(); ++it) equal.push_back({*it, {}, {}, {}});
  const auto e = rank(equal);
  CHECK(e.order == std::vector<PolicyId>(kAllPolicies.begin(), kAllPolicies.end()));
  CHECK(e.trace[0].find("enumeration order") != std::string::npos);
}

TEST_CASE("p90 and sd satisfy their definitions") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::uint64_t> v(1 + rng() % 50);
    for (auto& x : v) x = rng() % 100;
    const auto d = make_distribution(v);
    const auto at_most = std::count_if(v.begin(), v.end(), [&](auto x) { return x <= d.p90; });
    CHECK(10 * at_most >= 9 * static_cast<long>(v.size()));
    for (auto x : v) {
      if (x < d.p90) {
        const auto below = std::count_if(v.begin(), v.end(), [&](auto y) { return y <= x; });
        CHECK(10 * below < 9 * static_cast<long>(v.size()));
      }
    }
    double mean = 0;
    for (auto x : v) mean += static_cast<double>(x);
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (auto x : v) ss += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
    CHECK(std::abs(d.sd - std::sqrt(ss / static_cast<double>(v.size()))) < 1e-9);
  }
}
