#include "cfisurface/generator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "cfisurface/error.hpp"
#include "cfisurface/signature.hpp"

namespace cfisurface {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// mt19937_64 output is fixed by the standard; the draws below avoid the
/// implementation-defined <random> distributions so corpora are stable.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  std::size_t weighted(const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double x = unit() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (x < weights[i]) return i;
      x -= weights[i];
    }
    return weights.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

constexpr std::array<TypeLeaf, 12> kValueLeaves{
    TypeLeaf::kBool, TypeLeaf::kChar, TypeLeaf::kI8,  TypeLeaf::kI16, TypeLeaf::kI32, TypeLeaf::kI64,
    TypeLeaf::kU8,   TypeLeaf::kU16,  TypeLeaf::kU32, TypeLeaf::kU64, TypeLeaf::kF32, TypeLeaf::kF64,
};

std::string padded(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, n);
  return buf;
}

struct Signature {
  std::string name;
  std::vector<TypeExpr> params;
  TypeExpr ret;

  std::string key() const { return name + '\x1f' + exact_param_key(params); }
};

struct Slot {
  std::size_t signature;
  std::optional<std::size_t> impl;  // nullopt = pure
  EntryKind kind;
};

struct Table {
  std::vector<std::string> path;
  bool leading_offset = false;
  std::vector<Slot> slots;
};

struct Class {
  std::string id;
  std::vector<std::size_t> bases;
  std::vector<std::size_t> ancestors;  // transitive, sorted
  std::vector<Table> tables;           // empty for non-virtual classes
};

class Generator {
 public:
  explicit Generator(const GeneratorConfig& config)
      : cfg_(config),
        class_rng_(config.seed, 1),
        type_rng_(config.seed, 2),
        free_rng_(config.seed, 3),
        callsite_rng_(config.seed, 4),
        direct_rng_(config.seed, 5) {
    arity_weights_ = cfg_.arity_weights;
    if (arity_weights_.empty()) arity_weights_.assign(cfg_.max_params + 1, 1.0);
    leaf_weights_ = cfg_.leaf_weights;
    if (leaf_weights_.empty()) leaf_weights_.assign(kValueLeaves.size() + 1, 1.0);
  }

  ProgramFacts run() {
    for (std::size_t i = 0; i < cfg_.n_classes; ++i) make_class(i);
    for (std::size_t i = 0; i < cfg_.n_free_functions; ++i) make_free_function(i);
    if (cfg_.n_callsites > 0 && functions_.empty()) {
      throw InfeasibleConfigError("callsites requested but the corpus has no functions");
    }
    std::vector<Callsite> callsites;
    for (std::size_t i = 0; i < cfg_.n_callsites; ++i) callsites.push_back(make_callsite(i));
    add_direct_calls();
    return ProgramFacts(emit_classes(), std::move(functions_), emit_vtables(), std::move(callsites));
  }

 private:
  TypeExpr random_type(Rng& rng, bool allow_void) {
    if (rng.chance(cfg_.p_pointer)) {
      const std::uint32_t depth = rng.chance(0.2) ? 2 : 1;
      if (rng.chance(0.15)) return TypeExpr::primitive(TypeLeaf::kVoid, depth);
      TypeExpr leaf = random_leaf(rng);
      for (std::uint32_t d = 0; d < depth; ++d) leaf = TypeExpr::pointer_to(std::move(leaf));
      return leaf;
    }
    if (allow_void && rng.chance(cfg_.p_void_return)) return TypeExpr::primitive(TypeLeaf::kVoid);
    return random_leaf(rng);
  }

  TypeExpr random_leaf(Rng& rng) {
    const std::size_t pick = rng.weighted(leaf_weights_);
    if (pick < kValueLeaves.size()) return TypeExpr::primitive(kValueLeaves[pick]);
    return TypeExpr::named("T" + std::to_string(rng.below(std::max<std::uint32_t>(1, cfg_.named_type_pool))));
  }

  std::vector<TypeExpr> random_params(Rng& rng) {
    const std::size_t arity = rng.weighted(arity_weights_);
    std::vector<TypeExpr> params;
    for (std::size_t i = 0; i < arity; ++i) params.push_back(random_type(rng, false));
    return params;
  }

  SourceLoc random_loc(Rng& rng, std::size_t n) {
    return {"src/unit" + std::to_string(n % 37) + ".cc", static_cast<std::uint32_t>(1 + rng.below(4000)),
            static_cast<std::uint32_t>(1 + rng.below(80))};
  }

  std::size_t add_function(const Signature& sig, const std::optional<std::string>& owner, bool is_virtual,
                           bool is_pure, bool is_variadic, Rng& rng) {
    FunctionRecord f;
    f.id = padded('F', functions_.size());
    f.name = sig.name;
    f.owning_class = owner;
    f.params = sig.params;
    f.is_variadic = is_variadic;
    f.return_type = sig.ret;
    f.is_virtual = is_virtual;
    f.is_pure_virtual = is_pure;
    f.source_loc = random_loc(rng, functions_.size());
    functions_.push_back(std::move(f));
    return functions_.size() - 1;
  }

  std::size_t table_count(std::size_t c) const { return classes_[c].tables.size(); }

  bool related(std::size_t a, std::size_t b) const {
    const auto& aa = classes_[a].ancestors;
    const auto& ba = classes_[b].ancestors;
    return std::binary_search(aa.begin(), aa.end(), b) || std::binary_search(ba.begin(), ba.end(), a);
  }

  std::vector<std::size_t> choose_bases(std::size_t i) {
    std::vector<std::size_t> bases;
    if (i == 0 || class_rng_.chance(cfg_.p_root)) return bases;
    bases.push_back(class_rng_.below(i));
    std::size_t tables = table_count(bases[0]);
    for (std::uint32_t k = 1; k < cfg_.max_bases; ++k) {
      if (!class_rng_.chance(cfg_.p_extra_base)) continue;
      const std::size_t b = class_rng_.below(i);
      const bool clash = std::any_of(bases.begin(), bases.end(),
                                     [&](std::size_t x) { return x == b || related(x, b); });
      if (clash) continue;
      if (tables + table_count(b) > cfg_.max_tables_per_class) continue;
      tables += table_count(b);
      bases.push_back(b);
    }
    return bases;
  }

  void make_class(std::size_t i) {
    Class c;
    c.id = padded('C', i);
    c.bases = choose_bases(i);
    std::set<std::size_t> ancestors;
    for (auto b : c.bases) {
      ancestors.insert(b);
      ancestors.insert(classes_[b].ancestors.begin(), classes_[b].ancestors.end());
    }
    c.ancestors.assign(ancestors.begin(), ancestors.end());

    std::vector<std::size_t> poly_bases;
    for (auto b : c.bases) {
      if (!classes_[b].tables.empty()) poly_bases.push_back(b);
    }

    // Distinct inherited signatures, in first-seen order.
    std::vector<std::size_t> inherited;
    std::set<std::string> inherited_keys;
    for (auto b : poly_bases) {
      for (const auto& t : classes_[b].tables) {
        for (const auto& s : t.slots) {
          if (inherited_keys.insert(signatures_[s.signature].key()).second) inherited.push_back(s.signature);
        }
      }
    }

    const bool polymorphic = !poly_bases.empty() || i == 0 || class_rng_.chance(cfg_.p_polymorphic);
    if (!polymorphic) {
      classes_.push_back(std::move(c));
      return;
    }

    std::map<std::size_t, std::size_t> overrides;  // signature -> function
    for (auto sig : inherited) {
      if (class_rng_.chance(cfg_.p_override)) {
        overrides[sig] = add_function(signatures_[sig], c.id, true, false, false, class_rng_);
      }
    }

    std::size_t n_new = class_rng_.below(cfg_.max_new_virtuals + 1);
    if (poly_bases.empty()) n_new = std::max<std::size_t>(n_new, 1);
    std::vector<Slot> new_slots;
    std::set<std::string> taken = inherited_keys;
    for (std::size_t k = 0; k < n_new; ++k) {
      Signature sig;
      sig.params = random_params(type_rng_);
      sig.ret = random_type(type_rng_, true);
      for (int attempt = 0;; ++attempt) {
        sig.name = attempt < 8 ? "m" + std::to_string(class_rng_.below(std::max<std::uint32_t>(1, cfg_.method_name_pool)))
                               : "m" + std::to_string(i) + "_" + std::to_string(k);
        if (!taken.count(sig.key())) break;
      }
      taken.insert(sig.key());
      signatures_.push_back(sig);
      const bool pure = class_rng_.chance(cfg_.p_pure);
      const std::size_t f = add_function(sig, c.id, true, pure, false, class_rng_);
      new_slots.push_back({signatures_.size() - 1, pure ? std::nullopt : std::optional<std::size_t>(f),
                           pure ? EntryKind::kPure : EntryKind::kFunction});
    }

    if (poly_bases.empty()) {
      c.tables.push_back({{c.id}, false, std::move(new_slots)});
    } else {
      for (std::size_t j = 0; j < poly_bases.size(); ++j) {
        for (const auto& base_table : classes_[poly_bases[j]].tables) {
          const bool primary = c.tables.empty();
          Table t;
          t.path.push_back(c.id);
          t.path.insert(t.path.end(), base_table.path.begin(), base_table.path.end());
          t.leading_offset = !primary;
          t.slots = base_table.slots;
          for (auto& s : t.slots) {
            auto it = overrides.find(s.signature);
            if (it == overrides.end()) continue;
            s.impl = it->second;
            s.kind = primary ? EntryKind::kFunction : EntryKind::kThunk;
          }
          if (primary) t.slots.insert(t.slots.end(), new_slots.begin(), new_slots.end());
          c.tables.push_back(std::move(t));
        }
      }
    }
    classes_.push_back(std::move(c));
  }

  void make_free_function(std::size_t i) {
    Signature sig;
    sig.name = "fn" + std::to_string(i);
    sig.params = random_params(free_rng_);
    sig.ret = random_type(free_rng_, true);
    add_function(sig, std::nullopt, false, false, free_rng_.chance(cfg_.p_variadic), free_rng_);
  }

  Callsite make_callsite(std::size_t i) {
    Rng& rng = callsite_rng_;
    Callsite cs;
    cs.id = padded('S', i);
    cs.source_loc = random_loc(rng, i);

    if (virtual_classes_.empty()) {
      for (std::size_t c = 0; c < classes_.size(); ++c) {
        if (!classes_[c].tables.empty()) virtual_classes_.push_back(c);
      }
    }
    if (!virtual_classes_.empty() && rng.chance(cfg_.p_virtual_callsite)) {
      const Class& c = classes_[virtual_classes_[rng.below(virtual_classes_.size())]];
      const std::size_t order = rng.below(c.tables.size());
      const Table& t = c.tables[order];
      const std::size_t slot = rng.below(t.slots.size());
      const Signature& sig = signatures_[t.slots[slot].signature];
      cs.kind = CallsiteKind::kVirtualDispatch;
      cs.args = sig.params;
      cs.returns_used = !sig.ret.is_void() && rng.chance(cfg_.p_returns_used);
      cs.callee_name_hint = sig.name;
      cs.static_class = c.id;
      cs.table_order = static_cast<std::uint32_t>(order);
      cs.entry_index = static_cast<std::uint32_t>(slot);
    } else {
      cs.kind = CallsiteKind::kFunctionPointer;
      const FunctionRecord& f = functions_[rng.below(functions_.size())];
      if (rng.chance(0.8)) {
        cs.args = f.params;
        if (f.is_variadic) {
          for (std::uint64_t extra = rng.below(3); extra > 0; --extra) cs.args.push_back(random_type(rng, false));
        }
        cs.returns_used = !f.return_type.is_void() && rng.chance(cfg_.p_returns_used);
      } else {
        cs.args = random_params(rng);
        cs.returns_used = rng.chance(cfg_.p_returns_used);
      }
    }
    cs.enclosing_function = functions_[rng.below(functions_.size())].id;
    return cs;
  }

  void add_direct_calls() {
    if (functions_.empty()) return;
    for (std::uint32_t k = 0; k < cfg_.n_direct_calls; ++k) {
      auto& callee = functions_[direct_rng_.below(functions_.size())];
      callee.direct_callers.push_back(functions_[direct_rng_.below(functions_.size())].id);
    }
  }

  std::vector<ClassRecord> emit_classes() const {
    std::vector<ClassRecord> out;
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      ClassRecord r;
      r.id = classes_[i].id;
      r.name = "Class" + std::to_string(i);
      for (auto b : classes_[i].bases) r.bases.push_back({classes_[b].id, false});
      r.is_virtual_class = !classes_[i].tables.empty();
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<VTableRecord> emit_vtables() const {
    std::vector<VTableRecord> out;
    for (const auto& c : classes_) {
      for (std::size_t order = 0; order < c.tables.size(); ++order) {
        const Table& t = c.tables[order];
        VTableRecord r;
        r.id = padded('V', out.size());
        r.owning_class = c.id;
        r.order = static_cast<std::uint32_t>(order);
        r.base_path = t.path;
        if (t.leading_offset) r.entries.push_back({EntryKind::kOffset, std::nullopt, std::nullopt});
        for (std::size_t s = 0; s < t.slots.size(); ++s) {
          const Slot& slot = t.slots[s];
          VTableEntry e;
          e.kind = slot.kind;
          if (slot.impl) e.function_id = functions_[*slot.impl].id;
          e.entry_index = static_cast<std::uint32_t>(s);
          r.entries.push_back(std::move(e));
        }
        out.push_back(std::move(r));
      }
    }
    return out;
  }

  const GeneratorConfig& cfg_;
  Rng class_rng_;
  Rng type_rng_;
  Rng free_rng_;
  Rng callsite_rng_;
  Rng direct_rng_;
  std::vector<double> arity_weights_;
  std::vector<double> leaf_weights_;
  std::vector<Signature> signatures_;
  std::vector<Class> classes_;
  std::vector<FunctionRecord> functions_;
  std::vector<std::size_t> virtual_classes_;
};

void check_config(const GeneratorConfig& c) {
  auto probability = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InfeasibleConfigError(std::string(name) + " must lie in [0, 1]");
  };
  probability(c.p_override, "p_override");
  probability(c.p_virtual_callsite, "p_virtual_callsite");
  probability(c.p_root, "p_root");
  probability(c.p_extra_base, "p_extra_base");
  probability(c.p_polymorphic, "p_polymorphic");
  probability(c.p_pure, "p_pure");
  probability(c.p_void_return, "p_void_return");
  probability(c.p_returns_used, "p_returns_used");
  probability(c.p_variadic, "p_variadic");
  probability(c.p_pointer, "p_pointer");
  if (c.max_bases < 1) throw InfeasibleConfigError("max_bases must be at least 1");
  if (c.max_params > 8) throw InfeasibleConfigError("max_params must be at most 8");
  if (c.max_tables_per_class < 1) throw InfeasibleConfigError("max_tables_per_class must be at least 1");
  auto weights = [](const std::vector<double>& w, std::size_t expected, const char* name) {
    if (w.empty()) return;
    double total = 0;
    for (double x : w) {
      if (!(x >= 0.0)) throw InfeasibleConfigError(std::string(name) + " must be non-negative");
      total += x;
    }
    if (w.size() != expected || !(total > 0.0)) {
      throw InfeasibleConfigError(std::string(name) + " needs " + std::to_string(expected) +
                                  " weights with a positive sum");
    }
  };
  weights(c.arity_weights, c.max_params + 1, "arity_weights");
  weights(c.leaf_weights, kValueLeaves.size() + 1, "leaf_weights");
  if (c.n_callsites > 0 && c.n_free_functions == 0 && c.n_classes == 0) {
    throw InfeasibleConfigError("callsites requested but the corpus has no functions");
  }
}

}  // namespace

ProgramFacts generate_corpus(const GeneratorConfig& config) {
  check_config(config);
  return Generator(config).run();
}

}  // namespace cfisurface
