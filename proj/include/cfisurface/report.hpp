#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfisurface/facts.hpp"
#include "cfisurface/generator.hpp"
#include "cfisurface/metrics.hpp"
#include "cfisurface/policy.hpp"

namespace cfisurface {

enum class Scope : std::uint8_t { kVirtual, kAll };
enum class BaselineChoice : std::uint8_t { kAllFunctions, kVirtualFunctions, kAuto };
enum class OutputFormat : std::uint8_t { kCsv, kJson, kMd };

std::string_view to_string(Scope s) noexcept;
std::string_view to_string(BaselineChoice b) noexcept;
std::string_view to_string(OutputFormat f) noexcept;

struct AnalysisOptions {
  std::vector<PolicyId> policies{kAllPolicies.begin(), kAllPolicies.end()};
  Scope scope = Scope::kVirtual;
  BaselineChoice baseline = BaselineChoice::kAuto;
  bool rtr = false;
  PolicyOptions policy_options;
};

/// Scope a policy is actually evaluated over: only bin types, safe src types
/// and src types follow the requested scope, the rest always use virtual
/// callsites.
Scope effective_scope(PolicyId policy, Scope requested) noexcept;
/// kAuto resolves to all functions for policies (1)-(4) and to virtual
/// functions for (5)-(8).
BaselineChoice effective_baseline(PolicyId policy, BaselineChoice requested) noexcept;
std::uint64_t baseline_count(const ProgramFacts& facts, BaselineChoice resolved) noexcept;

struct PolicyReport {
  PolicyId policy;
  Scope scope;
  BaselineChoice baseline;
  std::uint64_t baseline_functions = 0;
  Distribution ctr;
  /// Absent when the baseline is zero.
  std::optional<NormalizedDistribution> normalized;
  std::optional<Distribution> rtr;
  std::optional<std::uint64_t> fcga;
  std::optional<std::uint64_t> bcga;
  /// One per callsite in scope, ascending by callsite id.
  std::vector<TargetSet> target_sets;
};

struct MetricsReport {
  std::size_t callsites = 0;
  std::size_t virtual_callsites = 0;
  std::size_t functions = 0;
  std::size_t virtual_functions = 0;
  std::vector<PolicyReport> policies;
  Ranking ranking;
};

/// Evaluates the selected policies and derives every metric. `facts` must be
/// validated. Gadget metrics are filled in when `gadgets` is given.
MetricsReport analyze(const ProgramFacts& facts, const AnalysisOptions& options,
                      const GadgetAnnotations* gadgets = nullptr);

std::string render_report(const MetricsReport& report, OutputFormat format);
std::string render_per_callsite(const ProgramFacts& facts, const MetricsReport& report,
                                OutputFormat format, bool expand);
std::string render_ranking(const Ranking& ranking, const std::vector<RankInput>& inputs,
                           OutputFormat format);

/// Externally supplied normalized aggregates, e.g.
/// `[{"policy": "BinTypes", "avg": "55.1", "p90": "81.8", "sd": "18.62"}]`.
/// "sd" and "p90" default to 0. Throws FactsSyntaxError / FactsSchemaError.
std::vector<RankInput> parse_rank_inputs(std::string_view text);

struct RunConfig {
  std::string facts_path;
  /// Empty selects all policies.
  std::vector<PolicyId> policies;
  Scope scope = Scope::kVirtual;
  BaselineChoice baseline = BaselineChoice::kAuto;
  OutputFormat format = OutputFormat::kMd;
  bool expand = false;
  std::optional<std::string> gadgets_path;
  bool rtr = false;
  std::optional<std::string> out_path;
  std::optional<std::string> aggregates_path;
  GeneratorConfig generator;
  PolicyOptions policy_options;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 3;

struct CommandResult {
  int exit_code = kExitOk;
  /// Destined for --out or standard output; empty on failure.
  std::string document;
  /// Destined for standard error.
  std::string log;
};

CommandResult cmd_analyze(const RunConfig& config);
CommandResult cmd_per_callsite(const RunConfig& config);
CommandResult cmd_generate(const RunConfig& config);
CommandResult cmd_rank(const RunConfig& config);

}  // namespace cfisurface
