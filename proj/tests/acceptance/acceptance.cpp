// One line per acceptance criterion; exit status is the number of failures.
#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "../unit/builder.hpp"
#include "cfisurface/facts_io.hpp"
#include "cfisurface/generator.hpp"
#include "cfisurface/metrics.hpp"
#include "cfisurface/oracle.hpp"
#include "cfisurface/report.hpp"

using namespace cfisurface;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome normalization() {
  struct Case {
    std::uint64_t value, baseline;
    const char* want;
  };
  const Case cases[] = {{19395, 32478, "59.72"}, {30179, 32478, "92.92"}, {2406, 32478, "7.41"},
                        {2113, 32478, "6.51"},   {6128, 6300, "97.27"}};
  const auto start = Clock::now();
  std::string got[5];
  for (int i = 0; i < 5; ++i) got[i] = normalize(cases[i].value, cases[i].baseline).str();
  const double ms = ms_since(start);
  bool ok = ms < 1.0;
  std::string detail;
  for (int i = 0; i < 5; ++i) {
    ok = ok && got[i] == cases[i].want;
    detail += got[i] + " ";
  }
  return {ok, detail + fmt("in %.4f ms", ms)};
}

Outcome ranking() {
  const std::string table = R"([
    {"policy": "BinTypes", "avg": 55.1, "p90": 81.8, "sd": 18.62},
    {"policy": "SafeSrcTypes", "avg": 11.66, "p90": 22.19, "sd": 9.12},
    {"policy": "SrcTypes", "avg": 11.3, "p90": 22.19, "sd": 9.22},
    {"policy": "StrictSrcTypes", "avg": 0.15, "p90": 0.61, "sd": 0.25},
    {"policy": "AllVtables", "avg": 94.35, "p90": 94.35, "sd": 0.0},
    {"policy": "VtableIsland", "avg": 0.53, "p90": 1.79, "sd": 0.77},
    {"policy": "SubHierarchy", "avg": 0.17, "p90": 0.34, "sd": 0.46},
    {"policy": "StrictSubHierarchy", "avg": 0.17, "p90": 0.33, "sd": 0.46}])";
  const std::vector<PolicyId> want{PolicyId::kStrictSrcTypes, PolicyId::kStrictSubHierarchy,
                                   PolicyId::kSubHierarchy,   PolicyId::kVtableIsland,
                                   PolicyId::kSrcTypes,       PolicyId::kSafeSrcTypes,
                                   PolicyId::kBinTypes,       PolicyId::kAllVtables};
  const auto inputs = parse_rank_inputs(table);
  const auto start = Clock::now();
  const auto r = rank(inputs);
  const double ms = ms_since(start);
  std::string order;
  for (auto p : r.order) order += "(" + std::to_string(policy_number(p)) + ")";
  return {r.order == want && ms < 1.0, order + fmt(" in %.4f ms", ms)};
}

// Criteria 3 to 6 share one family of corpora.
struct CorpusStats {
  std::size_t corpora = 0;
  std::size_t max_classes = 0;
  std::size_t max_callsites = 0;
  std::uint64_t virtual_sites = 0;
  std::uint64_t indirect_sites = 0;
  std::uint64_t lattice_violations = 0;
  std::uint64_t dispatch_checks = 0;
  std::uint64_t dispatch_violations = 0;
  std::uint64_t oracle_queries = 0;
  std::uint64_t oracle_mismatches = 0;
  std::uint64_t constancy_violations = 0;
  double lattice_ms = 0;
  double dispatch_ms = 0;
  double oracle_ms = 0;
};

std::vector<GeneratorConfig> corpus_configs(std::size_t count) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return static_cast<std::uint32_t>(std::floor(std::exp(std::log(lo) + u(rng) * (std::log(hi + 1) - std::log(lo)))));
  };
  std::vector<GeneratorConfig> out;
  for (std::size_t i = 0; i < count; ++i) {
    GeneratorConfig c;
    c.seed = rng();
    c.n_classes = i == 0 ? 200 : std::min<std::uint32_t>(200, log_uniform(1, 200));
    c.n_callsites = i == 0 ? 2000 : std::min<std::uint32_t>(2000, log_uniform(1, 2000));
    c.n_free_functions = static_cast<std::uint32_t>(rng() % 60);
    c.max_bases = 1 + static_cast<std::uint32_t>(rng() % 3);
    c.p_override = u(rng);
    c.p_virtual_callsite = 0.3 + 0.7 * u(rng);
    c.max_params = 1 + static_cast<std::uint32_t>(rng() % 5);
    c.p_root = 0.05 + 0.4 * u(rng);
    c.p_extra_base = 0.5 * u(rng);
    c.p_pure = 0.2 * u(rng);
    c.method_name_pool = 2 + static_cast<std::uint32_t>(rng() % 12);
    out.push_back(c);
  }
  return out;
}

bool subset(const MemberList& a, const MemberList& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

CorpusStats run_corpora() {
  CorpusStats s;
  for (const auto& config : corpus_configs(1000)) {
    const auto facts = generate_corpus(config);
    ++s.corpora;
    s.max_classes = std::max(s.max_classes, facts.classes().size());
    s.max_callsites = std::max(s.max_callsites, facts.callsites().size());

    auto start = Clock::now();
    const PolicyEngine engine(facts);
    std::vector<std::vector<TargetSet>> sets(facts.callsites().size());
    const MemberList* all_vtables = nullptr;
    for (std::size_t i = 0; i < facts.callsites().size(); ++i) {
      const auto& cs = facts.callsites()[i];
      for (auto p : kAllPolicies) {
        if (!engine.applicable(p, cs) || (p == PolicyId::kStrictSrcTypes && !cs.callee_name_hint)) {
          sets[i].push_back({cs.id, p, nullptr});
          continue;
        }
        sets[i].push_back(engine.evaluate(p, cs));
      }
      const auto& t = sets[i];
      auto m = [&](PolicyId p) -> const MemberList& { return *t[static_cast<std::size_t>(p)].members; };
      ++s.indirect_sites;
      if (!subset(m(PolicyId::kSrcTypes), m(PolicyId::kSafeSrcTypes))) ++s.lattice_violations;
      if (!cs.is_virtual()) continue;
      ++s.virtual_sites;
      if (!subset(m(PolicyId::kStrictSubHierarchy), m(PolicyId::kSubHierarchy)) ||
          !subset(m(PolicyId::kSubHierarchy), m(PolicyId::kVtableIsland)) ||
          !subset(m(PolicyId::kVtableIsland), m(PolicyId::kAllVtables))) {
        ++s.lattice_violations;
      }
      const auto& av = m(PolicyId::kAllVtables);
      if (!all_vtables) all_vtables = &av;
      if (av != *all_vtables) ++s.constancy_violations;
    }
    s.lattice_ms += ms_since(start);

    start = Clock::now();
    const auto& ch = engine.class_hierarchy();
    for (std::size_t i = 0; i < facts.callsites().size(); ++i) {
      const auto& cs = facts.callsites()[i];
      if (!cs.is_virtual()) continue;
      for (auto d : ch.descendants(*ch.node(*cs.static_class))) {
        const auto target = benign_dispatch_target(facts, cs, ch.id(d));
        if (!target) continue;
        ++s.dispatch_checks;
        const auto f = static_cast<std::uint32_t>(*facts.function_index(*target));
        for (auto p : {PolicyId::kStrictSubHierarchy, PolicyId::kSubHierarchy, PolicyId::kVtableIsland,
                       PolicyId::kAllVtables}) {
          if (!sets[i][static_cast<std::size_t>(p)].contains(f)) ++s.dispatch_violations;
        }
      }
    }
    s.dispatch_ms += ms_since(start);

    start = Clock::now();
    const TargetOracle oracle(facts);
    for (std::size_t i = 0; i < facts.callsites().size(); ++i) {
      const auto& cs = facts.callsites()[i];
      for (auto p : kAllPolicies) {
        const auto& got = sets[i][static_cast<std::size_t>(p)];
        if (!got.members) continue;
        ++s.oracle_queries;
        if (*oracle.targets(p, cs).members != *got.members) ++s.oracle_mismatches;
      }
    }
    s.oracle_ms += ms_since(start);
  }
  return s;
}

Outcome constancy(const CorpusStats& s) {
  // SD of the AllVtables distribution on a corpus where every site shares one set.
  const auto facts = generate_corpus({.seed = 6, .n_classes = 120, .n_callsites = 1500});
  AnalysisOptions o;
  o.policies = {PolicyId::kAllVtables};
  const auto report = analyze(facts, o);
  const auto& d = report.policies[0].ctr;
  const bool flat = std::all_of(d.values.begin(), d.values.end(), [&](auto v) { return v == d.values[0]; });
  const bool ok = s.constancy_violations == 0 && flat && d.sd == 0.0 && d.variance_numerator() == 0 &&
                  report.policies[0].normalized->sd.hundredths == 0;
  return {ok, fmt("%llu differing sets over %llu virtual callsites; SD %.17g over %zu sites",
                  static_cast<unsigned long long>(s.constancy_violations),
                  static_cast<unsigned long long>(s.virtual_sites), d.sd, d.n())};
}

Outcome percentiles() {
  bool ok = make_distribution({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}).p90 == 9;
  std::mt19937_64 rng(77);
  std::size_t bad_p90 = 0, bad_sd = 0, bad_const = 0;
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint64_t> v(1 + rng() % 200);
    const std::uint64_t range = 1 + rng() % 100000;
    for (auto& x : v) x = rng() % range;
    const auto d = make_distribution(v);
    std::vector<std::uint64_t> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const auto at_most = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), d.p90) - sorted.begin());
    const auto below = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), d.p90) - sorted.begin());
    // At least 90% are <= p90, and no smaller member value has that property.
    if (10 * at_most < 9 * n || 10 * below >= 9 * n ||
        !std::binary_search(sorted.begin(), sorted.end(), d.p90)) {
      ++bad_p90;
    }
    long double mean = 0;
    for (auto x : v) mean += x;
    mean /= n;
    long double ss = 0;
    for (auto x : v) ss += (x - mean) * (x - mean);
    const double ref = static_cast<double>(std::sqrt(ss / n));
    const double rel = ref == 0 ? std::abs(d.sd) : std::abs(d.sd - ref) / ref;
    worst = std::max(worst, rel);
    if (rel > 1e-9) ++bad_sd;
    if (make_distribution(std::vector<std::uint64_t>(n, v[0])).sd != 0.0) ++bad_const;
  }
  ok = ok && bad_p90 == 0 && bad_sd == 0 && bad_const == 0;
  return {ok, fmt("p90[1..10]=9; 10000 sequences: %zu p90, %zu SD, %zu constant-SD failures; worst rel err %.2e",
                  bad_p90, bad_sd, bad_const, worst)};
}

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "cfi-surface-acceptance";
  fs::create_directories(dir);
  const auto path = dir / "det.cfifacts.json";
  std::ofstream(path) << write_facts(generate_corpus({.seed = 8, .n_classes = 150, .n_callsites = 1500,
                                                      .n_direct_calls = 200}));
  bool ok = true;
  std::string detail;
  for (auto format : {OutputFormat::kCsv, OutputFormat::kJson, OutputFormat::kMd}) {
    RunConfig c;
    c.facts_path = path.string();
    c.format = format;
    c.scope = Scope::kAll;
    c.rtr = true;
    const auto a = cmd_analyze(c);
    const auto b = cmd_analyze(c);
    const bool same = a.exit_code == kExitOk && b.exit_code == kExitOk && a.document == b.document;
    ok = ok && same;
    detail += std::string(to_string(format)) + (same ? " identical " : " DIFFER ") +
              fmt("(%zu bytes) ", a.document.size());
  }
  return {ok, detail};
}

Outcome scale() {
  // Class-owned functions come from the class count; free functions top up to the target.
  GeneratorConfig c{.seed = 2024, .n_classes = 10000, .n_free_functions = 0, .n_callsites = 50000};
  c.max_new_virtuals = 2;
  c.p_override = 0.4;
  c.max_bases = 2;
  const auto probe = generate_corpus(c);
  const auto methods = probe.functions().size();
  c.n_free_functions = methods < 30000 ? static_cast<std::uint32_t>(30000 - methods) : 0;

  const auto dir = fs::temp_directory_path() / "cfi-surface-acceptance";
  fs::create_directories(dir);
  const auto path = dir / "scale.cfifacts.json";
  const auto facts = generate_corpus(c);
  std::ofstream(path) << write_facts(facts);

  const auto start = Clock::now();
  RunConfig run;
  run.facts_path = path.string();
  run.scope = Scope::kAll;
  run.format = OutputFormat::kJson;
  const auto result = cmd_analyze(run);
  const double s = ms_since(start) / 1000.0;
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  const double gib = static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
  const bool ok = result.exit_code == kExitOk && facts.classes().size() == 10000 &&
                  facts.functions().size() == 30000 && facts.callsites().size() == 50000 && s < 60.0 &&
                  gib < 4.0;
  return {ok, fmt("%zu classes, %zu functions, %zu callsites: analyze %.2f s, peak RSS %.2f GiB",
                  facts.classes().size(), facts.functions().size(), facts.callsites().size(), s, gib)};
}

Outcome discriminator() {
  const auto facts = testing::multiple_inheritance();
  const auto& cs = *facts.find_callsite("S1");
  const PolicyEngine engine(facts);
  const auto sub = engine.eval_sub_hierarchy(cs).member_ids(facts);
  const auto strict = engine.eval_strict_sub_hierarchy(cs).member_ids(facts);
  // Hand enumeration: A's table and D's A-path table give A::f and D::f; VTV
  // also walks D's B-path table, whose slot 0 is the thunk to D::g.
  const std::vector<std::string> want_sub{"A::f", "D::f", "D::g"};
  const std::vector<std::string> want_strict{"A::f", "D::f"};
  const bool ok = sub == want_sub && strict == want_strict && strict.size() < sub.size() &&
                  oracle_targets(facts, PolicyId::kSubHierarchy, cs).member_ids(facts) == want_sub &&
                  oracle_targets(facts, PolicyId::kStrictSubHierarchy, cs).member_ids(facts) == want_strict;
  return {ok, fmt("SubHierarchy %zu targets, StrictSubHierarchy %zu targets", sub.size(), strict.size())};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int number, const char* name, const Outcome& o) {
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", number, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report(1, "normalization arithmetic", normalization());
  report(2, "ranking order", ranking());

  const auto s = run_corpora();
  const auto corpora = fmt("%zu corpora (max %zu classes, %zu callsites)", s.corpora, s.max_classes, s.max_callsites);
  report(3, "policy inclusion lattice",
         {s.corpora >= 1000 && s.lattice_violations == 0 && s.lattice_ms < 300000.0,
          corpora + fmt(", %llu virtual / %llu indirect callsites, %llu violations, %.1f s",
                        static_cast<unsigned long long>(s.virtual_sites),
                        static_cast<unsigned long long>(s.indirect_sites),
                        static_cast<unsigned long long>(s.lattice_violations), s.lattice_ms / 1000.0)});
  report(4, "dispatch soundness",
         {s.dispatch_checks > 0 && s.dispatch_violations == 0,
          fmt("%llu dispatch targets checked, %llu violations, %.1f s",
              static_cast<unsigned long long>(s.dispatch_checks),
              static_cast<unsigned long long>(s.dispatch_violations), s.dispatch_ms / 1000.0)});
  report(5, "oracle equivalence",
         {s.oracle_queries > 0 && s.oracle_mismatches == 0,
          fmt("%llu queries, %llu mismatches, %.1f s", static_cast<unsigned long long>(s.oracle_queries),
              static_cast<unsigned long long>(s.oracle_mismatches), s.oracle_ms / 1000.0)});
  report(6, "AllVtables constancy and SD", constancy(s));
  report(7, "percentile and SD properties", percentiles());
  report(8, "analyze determinism", determinism());
  report(9, "scale", scale());
  report(10, "sub-hierarchy discriminator", discriminator());

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
