#pragma once

#include <cstdint>
#include <vector>

#include "cfisurface/facts.hpp"

namespace cfisurface {

/// Knobs for the synthetic corpus generator. The first block is the core
/// shape; the rest tune the mix and have workable defaults.
struct GeneratorConfig {
  std::uint64_t seed = 0;
  std::uint32_t n_classes = 20;
  std::uint32_t n_free_functions = 20;
  std::uint32_t n_callsites = 50;
  /// Upper bound on direct bases per class.
  std::uint32_t max_bases = 2;
  /// Chance that a class overrides a given inherited virtual.
  double p_override = 0.5;
  double p_virtual_callsite = 0.7;
  /// At most 8.
  std::uint32_t max_params = 4;

  /// Chance that a class (other than the first) starts a new hierarchy.
  double p_root = 0.25;
  /// Chance of each base beyond the first, up to max_bases.
  double p_extra_base = 0.15;
  /// Chance that a class without polymorphic bases declares virtuals. The
  /// first class always does.
  double p_polymorphic = 0.8;
  std::uint32_t max_new_virtuals = 3;
  double p_pure = 0.0;
  double p_void_return = 0.4;
  double p_returns_used = 0.6;
  /// Free functions only.
  double p_variadic = 0.05;
  double p_pointer = 0.35;
  /// Weight per arity 0..max_params; empty means uniform.
  std::vector<double> arity_weights;
  /// Weight per non-void leaf (bool, char, i8..u64, f32, f64, named); empty
  /// means uniform.
  std::vector<double> leaf_weights;
  /// Distinct virtual method names; small pools make names collide across
  /// hierarchies.
  std::uint32_t method_name_pool = 12;
  std::uint32_t named_type_pool = 6;
  std::uint32_t n_direct_calls = 0;
  /// Bases whose addition would give a class more tables than this are skipped.
  std::uint32_t max_tables_per_class = 8;
};

/// Builds a well-formed program: one primary table per virtual class, base
/// tables carried into derived classes (secondary tables start with an
/// offset entry), overrides replacing inherited slots, new virtuals appended
/// to the primary table. A pure function of `config`.
/// Throws InfeasibleConfigError for out-of-range knobs or when callsites are
/// requested but no function can exist.
ProgramFacts generate_corpus(const GeneratorConfig& config);

}  // namespace cfisurface
