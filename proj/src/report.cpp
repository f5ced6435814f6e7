#include "cfisurface/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>
#include <variant>

#include "cfisurface/error.hpp"
#include "cfisurface/facts_io.hpp"

namespace cfisurface {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed2(double v) {
  const auto hundredths = static_cast<long long>(std::floor(static_cast<long double>(v) * 100.0L + 0.5L));
  return Percent{hundredths}.str();
}

std::string numbered(PolicyId p) { return "(" + std::to_string(policy_number(p)) + ")"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\n";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string md_row(const std::vector<std::string>& cells) {
  std::string line = "|";
  for (const auto& c : cells) line += " " + md_cell(c) + " |";
  return line + "\n";
}

std::string md_rule(std::size_t text_columns, std::size_t number_columns) {
  std::string line = "|";
  for (std::size_t i = 0; i < text_columns; ++i) line += " --- |";
  for (std::size_t i = 0; i < number_columns; ++i) line += " ---: |";
  return line + "\n";
}

std::string location(const SourceLoc& loc) {
  return loc.file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

std::vector<std::string> distribution_cells(const Distribution& d) {
  return {std::to_string(d.n()),   std::to_string(d.total),  std::to_string(d.min),
          std::to_string(d.p90),   std::to_string(d.max),    std::to_string(d.median),
          std::to_string(d.average_rounded()), fixed2(d.sd)};
}

ordered_json distribution_json(const Distribution& d) {
  ordered_json j;
  j["n"] = d.n();
  j["total"] = d.total;
  j["min"] = d.min;
  j["p90"] = d.p90;
  j["max"] = d.max;
  j["median"] = d.median;
  j["average"] = d.average_rounded();
  j["sd"] = fixed2(d.sd);
  return j;
}

std::optional<std::size_t> rank_position(const Ranking& ranking, PolicyId p) {
  auto it = std::find(ranking.order.begin(), ranking.order.end(), p);
  if (it == ranking.order.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ranking.order.begin()) + 1;
}

std::string render_report_csv(const MetricsReport& report) {
  std::string out = csv_row({"number", "policy", "label", "scope", "callsites", "ctr_total", "ctr_min",
                             "ctr_p90", "ctr_max", "ctr_median", "ctr_avg", "ctr_sd", "baseline",
                             "baseline_functions", "norm_avg", "norm_sd", "norm_p90", "norm_min",
                             "norm_max", "norm_median", "rtr_sites", "rtr_total", "rtr_min", "rtr_p90",
                             "rtr_max", "rtr_median", "rtr_avg", "rtr_sd", "fcga", "bcga", "rank"});
  for (const auto& p : report.policies) {
    std::vector<std::string> row{std::to_string(policy_number(p.policy)), std::string(policy_name(p.policy)),
                                 std::string(policy_label(p.policy)), std::string(to_string(p.scope))};
    auto ctr = distribution_cells(p.ctr);
    row.insert(row.end(), ctr.begin(), ctr.end());
    row.push_back(std::string(to_string(p.baseline)));
    row.push_back(std::to_string(p.baseline_functions));
    if (p.normalized) {
      const auto& n = *p.normalized;
      for (const auto& v : {n.average, n.sd, n.p90, n.min, n.max, n.median}) row.push_back(v.str());
    } else {
      row.insert(row.end(), 6, "");
    }
    if (p.rtr) {
      auto r = distribution_cells(*p.rtr);
      row.insert(row.end(), r.begin(), r.end());
    } else {
      row.insert(row.end(), 8, "");
    }
    row.push_back(p.fcga ? std::to_string(*p.fcga) : "");
    row.push_back(p.bcga ? std::to_string(*p.bcga) : "");
    auto pos = rank_position(report.ranking, p.policy);
    row.push_back(pos ? std::to_string(*pos) : "");
    out += csv_row(row);
  }
  return out;
}

ordered_json ranking_json(const Ranking& ranking) {
  ordered_json j;
  ordered_json order = ordered_json::array();
  for (auto p : ranking.order) order.push_back(std::string(policy_name(p)));
  j["order"] = std::move(order);
  j["trace"] = ranking.trace;
  return j;
}

std::string render_report_json(const MetricsReport& report) {
  ordered_json doc;
  doc["functions"] = report.functions;
  doc["virtual_functions"] = report.virtual_functions;
  doc["callsites"] = report.callsites;
  doc["virtual_callsites"] = report.virtual_callsites;
  ordered_json policies = ordered_json::array();
  for (const auto& p : report.policies) {
    ordered_json j;
    j["policy"] = std::string(policy_name(p.policy));
    j["number"] = policy_number(p.policy);
    j["label"] = std::string(policy_label(p.policy));
    j["scope"] = std::string(to_string(p.scope));
    j["ctr"] = distribution_json(p.ctr);
    ordered_json baseline;
    baseline["kind"] = std::string(to_string(p.baseline));
    baseline["count"] = p.baseline_functions;
    j["baseline"] = std::move(baseline);
    if (p.normalized) {
      const auto& n = *p.normalized;
      ordered_json nj;
      nj["average"] = n.average.str();
      nj["sd"] = n.sd.str();
      nj["p90"] = n.p90.str();
      nj["min"] = n.min.str();
      nj["max"] = n.max.str();
      nj["median"] = n.median.str();
      j["normalized"] = std::move(nj);
    } else {
      j["normalized"] = nullptr;
    }
    if (p.rtr) j["rtr"] = distribution_json(*p.rtr);
    if (p.fcga) j["fcga"] = *p.fcga;
    if (p.bcga) j["bcga"] = *p.bcga;
    policies.push_back(std::move(j));
  }
  doc["policies"] = std::move(policies);
  doc["ranking"] = ranking_json(report.ranking);
  return doc.dump(2) + "\n";
}

std::string ranking_markdown(const Ranking& ranking, const std::vector<RankInput>& inputs) {
  std::string out;
  for (std::size_t i = 0; i < ranking.order.size(); ++i) {
    const PolicyId p = ranking.order[i];
    auto in = std::find_if(inputs.begin(), inputs.end(), [&](const RankInput& r) { return r.policy == p; });
    out += std::to_string(i + 1) + ". " + numbered(p) + " " + std::string(policy_label(p));
    if (in != inputs.end()) out += " (" + in->average.str() + ")";
    out += "\n";
  }
  if (!ranking.trace.empty()) {
    out += "\nTie-break trace:\n\n";
    for (const auto& line : ranking.trace) out += "- " + line + "\n";
  }
  return out;
}

std::vector<RankInput> rank_inputs(const MetricsReport& report) {
  std::vector<RankInput> inputs;
  for (const auto& p : report.policies) {
    if (p.normalized) inputs.push_back({p.policy, p.normalized->average, p.normalized->p90, p.normalized->sd});
  }
  return inputs;
}

std::string render_report_md(const MetricsReport& report) {
  std::string out = "# CFI calltarget report\n\n";
  out += "Functions: " + std::to_string(report.functions) + " (virtual " +
         std::to_string(report.virtual_functions) + "). Callsites: " + std::to_string(report.callsites) +
         " (virtual " + std::to_string(report.virtual_callsites) + ").\n\n";

  out += "## Legitimate calltargets per callsite\n\n";
  out += md_row({"P", "Policy", "Scope", "Callsites", "CTR", "Min", "90p", "Max", "Med", "Avg", "SD"});
  out += md_rule(3, 8);
  for (const auto& p : report.policies) {
    std::vector<std::string> row{numbered(p.policy), std::string(policy_label(p.policy)),
                                 std::string(to_string(p.scope))};
    auto cells = distribution_cells(p.ctr);
    row.insert(row.end(), cells.begin(), cells.end());
    out += md_row(row);
  }

  out += "\n## Normalized results with the baseline\n\n";
  out += md_row({"P", "Policy", "Baseline", "B", "Avg", "SD", "90p"});
  out += md_rule(3, 4);
  for (const auto& p : report.policies) {
    std::vector<std::string> row{numbered(p.policy), std::string(policy_label(p.policy)),
                                 std::string(to_string(p.baseline)), std::to_string(p.baseline_functions)};
    if (p.normalized) {
      row.push_back(p.normalized->average.str());
      row.push_back(p.normalized->sd.str());
      row.push_back(p.normalized->p90.str());
    } else {
      row.insert(row.end(), 3, "n/a");
    }
    out += md_row(row);
  }

  const bool any_rtr = std::any_of(report.policies.begin(), report.policies.end(),
                                   [](const PolicyReport& p) { return p.rtr.has_value(); });
  if (any_rtr) {
    out += "\n## Return targets per return site\n\n";
    out += md_row({"P", "Policy", "Return sites", "RTR", "Min", "90p", "Max", "Med", "Avg", "SD"});
    out += md_rule(2, 8);
    for (const auto& p : report.policies) {
      if (!p.rtr) continue;
      std::vector<std::string> row{numbered(p.policy), std::string(policy_label(p.policy))};
      auto cells = distribution_cells(*p.rtr);
      row.insert(row.end(), cells.begin(), cells.end());
      out += md_row(row);
    }
  }

  const bool any_gadgets = std::any_of(report.policies.begin(), report.policies.end(),
                                       [](const PolicyReport& p) { return p.fcga.has_value(); });
  if (any_gadgets) {
    out += "\n## Gadget availability\n\n";
    out += md_row({"P", "Policy", "fCGA", "bCGA"});
    out += md_rule(2, 2);
    for (const auto& p : report.policies) {
      out += md_row({numbered(p.policy), std::string(policy_label(p.policy)),
                     p.fcga ? std::to_string(*p.fcga) : "n/a", p.bcga ? std::to_string(*p.bcga) : "n/a"});
    }
  }

  out += "\n## Ranking\n\n";
  out += ranking_markdown(report.ranking, rank_inputs(report));
  return out;
}

struct CallsiteRow {
  const Callsite* callsite;
  std::vector<const TargetSet*> sets;  // per reported policy, null when not evaluated
};

std::vector<CallsiteRow> callsite_rows(const ProgramFacts& facts, const MetricsReport& report) {
  std::vector<std::unordered_map<std::string_view, const TargetSet*>> by_policy(report.policies.size());
  bool all_scope = false;
  for (std::size_t i = 0; i < report.policies.size(); ++i) {
    all_scope = all_scope || report.policies[i].scope == Scope::kAll;
    for (const auto& t : report.policies[i].target_sets) by_policy[i].emplace(t.callsite_id, &t);
  }
  std::vector<CallsiteRow> rows;
  for (const auto& cs : facts.callsites()) {
    if (!all_scope && !cs.is_virtual()) continue;
    CallsiteRow row{&cs, {}};
    for (const auto& index : by_policy) {
      auto it = index.find(cs.id);
      row.sets.push_back(it == index.end() ? nullptr : it->second);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string size_cell(const TargetSet* t) { return t ? std::to_string(t->size()) : "n/a"; }

}  // namespace

std::string_view to_string(Scope s) noexcept { return s == Scope::kAll ? "all" : "virtual"; }

std::string_view to_string(BaselineChoice b) noexcept {
  switch (b) {
    case BaselineChoice::kAllFunctions: return "all-functions";
    case BaselineChoice::kVirtualFunctions: return "virtual-functions";
    case BaselineChoice::kAuto: return "auto";
  }
  return "auto";
}

std::string_view to_string(OutputFormat f) noexcept {
  switch (f) {
    case OutputFormat::kCsv: return "csv";
    case OutputFormat::kJson: return "json";
    case OutputFormat::kMd: return "md";
  }
  return "md";
}

Scope effective_scope(PolicyId policy, Scope requested) noexcept {
  return covers_function_pointers(policy) ? requested : Scope::kVirtual;
}

BaselineChoice effective_baseline(PolicyId policy, BaselineChoice requested) noexcept {
  if (requested != BaselineChoice::kAuto) return requested;
  return policy_number(policy) <= 4 ? BaselineChoice::kAllFunctions : BaselineChoice::kVirtualFunctions;
}

std::uint64_t baseline_count(const ProgramFacts& facts, BaselineChoice resolved) noexcept {
  if (resolved == BaselineChoice::kVirtualFunctions) {
    const auto f = facts.functions();
    return static_cast<std::uint64_t>(
        std::count_if(f.begin(), f.end(), [](const FunctionRecord& r) { return r.is_virtual; }));
  }
  return facts.functions().size();
}

MetricsReport analyze(const ProgramFacts& facts, const AnalysisOptions& options,
                      const GadgetAnnotations* gadgets) {
  const PolicyEngine engine(facts, options.policy_options);
  MetricsReport report;
  report.functions = facts.functions().size();
  report.virtual_functions = baseline_count(facts, BaselineChoice::kVirtualFunctions);
  report.callsites = facts.callsites().size();
  for (const auto& cs : facts.callsites()) report.virtual_callsites += cs.is_virtual() ? 1 : 0;

  const std::set<PolicyId> selected(options.policies.begin(), options.policies.end());
  for (PolicyId policy : selected) {
    PolicyReport p{policy,
                   effective_scope(policy, options.scope),
                   effective_baseline(policy, options.baseline),
                   0,
                   {},
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   {}};
    p.baseline_functions = baseline_count(facts, p.baseline);
    for (const auto& cs : facts.callsites()) {
      if (p.scope == Scope::kVirtual && !cs.is_virtual()) continue;
      if (!engine.applicable(policy, cs)) continue;
      p.target_sets.push_back(engine.evaluate(policy, cs));
    }
    p.ctr = ctr(p.target_sets);
    if (p.baseline_functions > 0) p.normalized = normalize(p.ctr, p.baseline_functions);
    if (options.rtr || gadgets) {
      const ReturnRelation relation(facts, p.target_sets);
      if (options.rtr) p.rtr = rtr(relation);
      if (gadgets) {
        p.fcga = fcga(p.target_sets, facts, *gadgets);
        p.bcga = bcga(relation, *gadgets);
      }
    }
    report.policies.push_back(std::move(p));
  }
  report.ranking = rank(rank_inputs(report));
  return report;
}

std::string render_report(const MetricsReport& report, OutputFormat format) {
  switch (format) {
    case OutputFormat::kCsv: return render_report_csv(report);
    case OutputFormat::kJson: return render_report_json(report);
    case OutputFormat::kMd: return render_report_md(report);
  }
  return {};
}

std::string render_per_callsite(const ProgramFacts& facts, const MetricsReport& report,
                                OutputFormat format, bool expand) {
  const auto rows = callsite_rows(facts, report);
  const auto& policies = report.policies;

  if (format == OutputFormat::kJson) {
    ordered_json doc = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json j;
      j["callsite"] = row.callsite->id;
      j["kind"] = row.callsite->is_virtual() ? "virtual_dispatch" : "function_pointer";
      j["location"] = location(row.callsite->source_loc);
      j["args"] = row.callsite->args.size();
      ordered_json sizes;
      for (std::size_t i = 0; i < policies.size(); ++i) {
        const std::string key(policy_name(policies[i].policy));
        if (row.sets[i]) {
          sizes[key] = row.sets[i]->size();
        } else {
          sizes[key] = nullptr;
        }
      }
      j["sizes"] = std::move(sizes);
      if (expand) {
        ordered_json targets;
        for (std::size_t i = 0; i < policies.size(); ++i) {
          if (!row.sets[i]) continue;
          ordered_json list = ordered_json::array();
          for (auto f : *row.sets[i]->members) {
            const auto& rec = facts.functions()[f];
            ordered_json t;
            t["function"] = rec.id;
            t["name"] = rec.name;
            t["file"] = rec.source_loc.file;
            t["line"] = rec.source_loc.line;
            t["column"] = rec.source_loc.column;
            list.push_back(std::move(t));
          }
          targets[std::string(policy_name(policies[i].policy))] = std::move(list);
        }
        j["targets"] = std::move(targets);
      }
      doc.push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
  }

  std::vector<std::string> header{"callsite", "kind", "location", "args"};
  for (const auto& p : policies) header.push_back(std::string(policy_cli_name(p.policy)));

  if (format == OutputFormat::kCsv) {
    std::string out;
    if (expand) {
      out = csv_row({"callsite", "policy", "function", "name", "file", "line", "column"});
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < policies.size(); ++i) {
          if (!row.sets[i]) continue;
          for (auto f : *row.sets[i]->members) {
            const auto& rec = facts.functions()[f];
            out += csv_row({row.callsite->id, std::string(policy_cli_name(policies[i].policy)), rec.id, rec.name,
                            rec.source_loc.file, std::to_string(rec.source_loc.line),
                            std::to_string(rec.source_loc.column)});
          }
        }
      }
      return out;
    }
    out = csv_row(header);
    for (const auto& row : rows) {
      std::vector<std::string> fields{row.callsite->id,
                                      row.callsite->is_virtual() ? "virtual_dispatch" : "function_pointer",
                                      location(row.callsite->source_loc), std::to_string(row.callsite->args.size())};
      for (const auto* t : row.sets) fields.push_back(size_cell(t));
      out += csv_row(fields);
    }
    return out;
  }

  std::string out = "# Legitimate calltargets per callsite\n\n";
  std::vector<std::string> md_header{"Callsite", "Kind", "Location", "Args"};
  for (const auto& p : policies) md_header.push_back(numbered(p.policy));
  out += md_row(md_header);
  out += md_rule(3, 1 + policies.size());
  for (const auto& row : rows) {
    std::vector<std::string> cells{row.callsite->id, row.callsite->is_virtual() ? "virtual" : "pointer",
                                   location(row.callsite->source_loc), std::to_string(row.callsite->args.size())};
    for (const auto* t : row.sets) cells.push_back(size_cell(t));
    out += md_row(cells);
  }
  out += "\nPolicies: ";
  for (std::size_t i = 0; i < policies.size(); ++i) {
    if (i) out += ", ";
    out += numbered(policies[i].policy) + " " + std::string(policy_label(policies[i].policy));
  }
  out += ".\n";
  if (expand) {
    out += "\n## Targets\n";
    for (const auto& row : rows) {
      out += "\n### " + row.callsite->id + " (" + location(row.callsite->source_loc) + ")\n\n";
      out += md_row({"Policy", "Function", "Name", "Location"});
      out += md_rule(4, 0);
      for (std::size_t i = 0; i < policies.size(); ++i) {
        if (!row.sets[i]) continue;
        for (auto f : *row.sets[i]->members) {
          const auto& rec = facts.functions()[f];
          out += md_row({numbered(policies[i].policy), rec.id, rec.name, location(rec.source_loc)});
        }
      }
    }
  }
  return out;
}

std::string render_ranking(const Ranking& ranking, const std::vector<RankInput>& inputs,
                           OutputFormat format) {
  auto input_of = [&](PolicyId p) {
    return std::find_if(inputs.begin(), inputs.end(), [&](const RankInput& r) { return r.policy == p; });
  };
  switch (format) {
    case OutputFormat::kCsv: {
      std::string out = csv_row({"rank", "number", "policy", "avg", "p90", "sd"});
      for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        auto in = input_of(ranking.order[i]);
        out += csv_row({std::to_string(i + 1), std::to_string(policy_number(in->policy)),
                        std::string(policy_name(in->policy)), in->average.str(), in->p90.str(), in->sd.str()});
      }
      return out;
    }
    case OutputFormat::kJson: {
      ordered_json doc = ranking_json(ranking);
      ordered_json entries = ordered_json::array();
      for (auto p : ranking.order) {
        auto in = input_of(p);
        ordered_json j;
        j["policy"] = std::string(policy_name(p));
        j["avg"] = in->average.str();
        j["p90"] = in->p90.str();
        j["sd"] = in->sd.str();
        entries.push_back(std::move(j));
      }
      doc["entries"] = std::move(entries);
      return doc.dump(2) + "\n";
    }
    case OutputFormat::kMd:
      return "# Policy ranking\n\n" + ranking_markdown(ranking, inputs);
  }
  return {};
}

std::vector<RankInput> parse_rank_inputs(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw FactsSyntaxError(e.what(), 1, e.byte);
  }
  if (doc.is_object() && doc.contains("policies")) doc = doc.at("policies");
  if (!doc.is_array()) throw FactsSchemaError("$", "expected an array of policy aggregates");
  std::vector<RankInput> out;
  std::set<PolicyId> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string path = "$[" + std::to_string(i) + "]";
    const auto& item = doc[i];
    if (!item.is_object() || !item.contains("policy") || !item.at("policy").is_string()) {
      throw FactsSchemaError(path, "expected an object with a string 'policy'");
    }
    for (const auto& [key, value] : item.items()) {
      if (key != "policy" && key != "avg" && key != "p90" && key != "sd") {
        throw FactsSchemaError(path, "unknown key '" + key + "'");
      }
    }
    auto policy = parse_policy(item.at("policy").get<std::string>());
    if (!policy) throw FactsSchemaError(path, "unknown policy '" + item.at("policy").get<std::string>() + "'");
    if (!seen.insert(*policy).second) throw FactsSchemaError(path, "policy listed twice");
    auto percent = [&](const char* key, bool required) -> Percent {
      if (!item.contains(key)) {
        if (required) throw FactsSchemaError(path, std::string("missing '") + key + "'");
        return {};
      }
      const auto& v = item.at(key);
      try {
        if (v.is_string()) return Percent::parse(v.get<std::string>());
        if (v.is_number()) {
          // Shortest round-trip spelling, so 0.17 stays 0.17.
          return Percent::parse(nlohmann::json(v.get<double>()).dump());
        }
      } catch (const std::invalid_argument& e) {
        throw FactsSchemaError(path, e.what());
      }
      throw FactsSchemaError(path, std::string("'") + key + "' must be a number or decimal string");
    };
    out.push_back({*policy, percent("avg", true), percent("p90", false), percent("sd", false)});
  }
  return out;
}

namespace {

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return buf.str();
}

CommandResult failure(int code, std::string log) {
  if (!log.empty() && log.back() != '\n') log += '\n';
  return {code, {}, std::move(log)};
}

// Everything analyze-like commands need before evaluating policies.
struct Loaded {
  ProgramFacts facts;
  std::optional<GadgetAnnotations> gadgets;
};

std::optional<CommandResult> check_usage(const RunConfig& config) {
  if (config.facts_path.empty()) return failure(kExitUsage, "error: --facts is required");
  if (config.scope == Scope::kAll) {
    for (PolicyId p : config.policies) {
      if (!covers_function_pointers(p)) {
        return failure(kExitUsage, "error: policy " + std::string(policy_cli_name(p)) +
                                       " applies to virtual callsites only; use --scope virtual");
      }
    }
  }
  return std::nullopt;
}

std::variant<Loaded, CommandResult> load(const RunConfig& config) {
  auto text = read_file(config.facts_path);
  if (!text) return failure(kExitIo, "error: cannot read " + config.facts_path);
  Loaded loaded;
  try {
    loaded.facts = parse_facts(*text);
  } catch (const Error& e) {
    return failure(kExitValidation, config.facts_path + ": " + e.what());
  }
  std::string log;
  for (const auto& d : validate_facts(loaded.facts)) log += config.facts_path + ": " + d.str() + "\n";
  if (!log.empty()) return failure(kExitValidation, log);
  if (config.gadgets_path) {
    auto gtext = read_file(*config.gadgets_path);
    if (!gtext) return failure(kExitIo, "error: cannot read " + *config.gadgets_path);
    try {
      loaded.gadgets = parse_gadgets(*gtext);
    } catch (const Error& e) {
      return failure(kExitValidation, *config.gadgets_path + ": " + e.what());
    }
    for (const auto& d : validate_gadgets(loaded.facts, *loaded.gadgets)) {
      log += *config.gadgets_path + ": " + d.str() + "\n";
    }
    if (!log.empty()) return failure(kExitValidation, log);
  }
  return loaded;
}

AnalysisOptions analysis_options(const RunConfig& config) {
  AnalysisOptions options;
  if (!config.policies.empty()) options.policies = config.policies;
  options.scope = config.scope;
  options.baseline = config.baseline;
  options.rtr = config.rtr;
  options.policy_options = config.policy_options;
  return options;
}

// Runs the shared load + analyze pipeline and hands the report to `render`.
template <typename Render>
CommandResult run_analysis(const RunConfig& config, Render render) {
  if (auto usage = check_usage(config)) return *usage;
  auto loaded = load(config);
  if (auto* err = std::get_if<CommandResult>(&loaded)) return *err;
  auto& in = std::get<Loaded>(loaded);
  try {
    const auto report = analyze(in.facts, analysis_options(config), in.gadgets ? &*in.gadgets : nullptr);
    return {kExitOk, render(in.facts, report), {}};
  } catch (const MissingNameHintError& e) {
    return failure(kExitValidation, config.facts_path + ": " + e.what());
  }
}

}  // namespace

CommandResult cmd_analyze(const RunConfig& config) {
  return run_analysis(config, [&](const ProgramFacts&, const MetricsReport& report) {
    return render_report(report, config.format);
  });
}

CommandResult cmd_per_callsite(const RunConfig& config) {
  return run_analysis(config, [&](const ProgramFacts& facts, const MetricsReport& report) {
    return render_per_callsite(facts, report, config.format, config.expand);
  });
}

CommandResult cmd_generate(const RunConfig& config) {
  ProgramFacts facts;
  try {
    facts = generate_corpus(config.generator);
  } catch (const InfeasibleConfigError& e) {
    return failure(kExitUsage, std::string("error: ") + e.what());
  }
  std::size_t virtual_callsites = 0;
  for (const auto& cs : facts.callsites()) virtual_callsites += cs.is_virtual() ? 1 : 0;
  std::string log = "generated " + std::to_string(facts.classes().size()) + " classes, " +
                    std::to_string(facts.functions().size()) + " functions (" +
                    std::to_string(baseline_count(facts, BaselineChoice::kVirtualFunctions)) + " virtual), " +
                    std::to_string(facts.vtables().size()) + " vtables, " +
                    std::to_string(facts.callsites().size()) + " callsites (" +
                    std::to_string(virtual_callsites) + " virtual), seed " +
                    std::to_string(config.generator.seed) + "\n";
  return {kExitOk, write_facts(facts), std::move(log)};
}

CommandResult cmd_rank(const RunConfig& config) {
  if (config.aggregates_path) {
    auto text = read_file(*config.aggregates_path);
    if (!text) return failure(kExitIo, "error: cannot read " + *config.aggregates_path);
    std::vector<RankInput> inputs;
    try {
      inputs = parse_rank_inputs(*text);
    } catch (const Error& e) {
      return failure(kExitValidation, *config.aggregates_path + ": " + e.what());
    }
    if (!config.policies.empty()) {
      std::erase_if(inputs, [&](const RankInput& r) {
        return std::find(config.policies.begin(), config.policies.end(), r.policy) == config.policies.end();
      });
    }
    return {kExitOk, render_ranking(rank(inputs), inputs, config.format), {}};
  }
  if (config.facts_path.empty()) return failure(kExitUsage, "error: rank needs --facts or --aggregates");
  return run_analysis(config, [&](const ProgramFacts&, const MetricsReport& report) {
    return render_ranking(report.ranking, rank_inputs(report), config.format);
  });
}

}  // namespace cfisurface
