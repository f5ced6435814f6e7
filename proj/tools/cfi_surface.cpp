#include <CLI11.hpp>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "cfisurface/report.hpp"

namespace fs = std::filesystem;
using namespace cfisurface;

namespace {

bool use_color() { return std::getenv("NO_COLOR") == nullptr && ::isatty(STDERR_FILENO); }

void print_log(const std::string& log) {
  if (log.empty()) return;
  if (!use_color()) {
    std::cerr << log;
    return;
  }
  std::size_t start = 0;
  while (start < log.size()) {
    std::size_t end = log.find('\n', start);
    if (end == std::string::npos) end = log.size();
    std::string line = log.substr(start, end - start);
    if (line.rfind("error:", 0) == 0) line = "\033[31merror:\033[0m" + line.substr(6);
    std::cerr << line << '\n';
    start = end + 1;
  }
}

// The document goes to a sibling temp file first so a failed write never
// leaves a truncated report behind.
bool write_output(const std::string& path, const std::string& document) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << document;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      return false;
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fs::remove(tmp, ec);
  return !ec;
}

std::vector<PolicyId> parse_policy_list(const std::string& text) {
  std::vector<PolicyId> out;
  if (text == "all") return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    auto p = parse_policy(item);
    if (!p) throw CLI::ValidationError("--policies", "unknown policy '" + item + "'");
    out.push_back(*p);
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfi-surface: measure the attack surface left by CFI policies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cfi-surface 1.0.0");

  RunConfig config;
  std::string policies = "all";
  std::string out_path;
  std::string gadgets_path;
  std::string aggregates_path;

  const std::map<std::string, Scope> scopes{{"virtual", Scope::kVirtual}, {"all", Scope::kAll}};
  const std::map<std::string, BaselineChoice> baselines{{"all-functions", BaselineChoice::kAllFunctions},
                                                        {"virtual-functions", BaselineChoice::kVirtualFunctions},
                                                        {"auto", BaselineChoice::kAuto}};
  const std::map<std::string, OutputFormat> formats{
      {"csv", OutputFormat::kCsv}, {"json", OutputFormat::kJson}, {"md", OutputFormat::kMd}};

  auto add_analysis_flags = [&](CLI::App* sub, bool facts_required) {
    auto* facts = sub->add_option("--facts", config.facts_path, "Program facts file (.cfifacts.json)");
    if (facts_required) facts->required();
    sub->add_option("--policies", policies, "Comma-separated policies or 'all'");
    sub->add_option_function<std::string>(
           "--scope", [&](const std::string& v) { config.scope = scopes.at(v); }, "virtual|all")
        ->check(CLI::IsMember(scopes));
    sub->add_option_function<std::string>(
           "--baseline", [&](const std::string& v) { config.baseline = baselines.at(v); },
           "all-functions|virtual-functions|auto")
        ->check(CLI::IsMember(baselines));
    sub->add_option_function<std::string>(
           "--format", [&](const std::string& v) { config.format = formats.at(v); }, "csv|json|md")
        ->check(CLI::IsMember(formats));
    sub->add_option("--out", out_path, "Output path (default: standard output)");
    sub->add_option("--gadgets", gadgets_path, "Gadget annotations file");
    sub->add_flag("--rtr", config.rtr, "Also compute return targets");
    sub->add_flag("--bin-types-at-least", [&](std::int64_t) {
      config.policy_options.bin_arity = PolicyOptions::BinArity::kTargetAtLeastProvided;
    }, "Bin types: targets must take at least the provided arguments");
    sub->add_flag("--bin-types-exclude-wide", [&](std::int64_t) {
      config.policy_options.over_six_args = PolicyOptions::OverSixArgs::kExclude;
    }, "Bin types: skip callsites with more than six arguments");
    sub->add_flag("--strict-pointer-interchange", config.policy_options.strict_pointer_interchange,
                  "Strict src types: let pointer parameters match any pointer");
  };

  auto* analyze = app.add_subcommand("analyze", "Report calltarget metrics per policy");
  add_analysis_flags(analyze, true);
  auto* per_callsite = app.add_subcommand("per-callsite", "List target set sizes per callsite");
  add_analysis_flags(per_callsite, true);
  per_callsite->add_flag("--expand", config.expand, "Add one row per legitimate target");
  auto* rank = app.add_subcommand("rank", "Rank policies by normalized aggregates");
  add_analysis_flags(rank, false);
  rank->add_option("--aggregates", aggregates_path, "Pre-computed normalized aggregates (JSON)");

  auto* generate = app.add_subcommand("generate", "Write a synthetic program facts file");
  auto& g = config.generator;
  generate->add_option("--seed", g.seed, "Random seed");
  generate->add_option("--classes", g.n_classes, "Number of classes");
  generate->add_option("--functions", g.n_free_functions, "Number of free functions");
  generate->add_option("--callsites", g.n_callsites, "Number of callsites");
  generate->add_option("--max-bases", g.max_bases, "Maximum direct bases per class");
  generate->add_option("--direct-calls", g.n_direct_calls, "Number of direct call edges");
  generate->add_option("--out", out_path, "Output path (default: standard output)");

  try {
    app.parse(argc, argv);
    config.policies = parse_policy_list(policies);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!out_path.empty()) config.out_path = out_path;
  if (!gadgets_path.empty()) config.gadgets_path = gadgets_path;
  if (!aggregates_path.empty()) config.aggregates_path = aggregates_path;

  CommandResult result;
  if (analyze->parsed()) {
    result = cmd_analyze(config);
  } else if (per_callsite->parsed()) {
    result = cmd_per_callsite(config);
  } else if (rank->parsed()) {
    result = cmd_rank(config);
  } else {
    result = cmd_generate(config);
  }

  print_log(result.log);
  if (result.exit_code != kExitOk) return result.exit_code;
  if (config.out_path) {
    if (!write_output(*config.out_path, result.document)) {
      print_log("error: cannot write " + *config.out_path + "\n");
      return kExitIo;
    }
  } else {
    std::cout << result.document << std::flush;
    if (!std::cout) return kExitIo;
  }
  return kExitOk;
}
