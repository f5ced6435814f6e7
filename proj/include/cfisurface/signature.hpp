#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfisurface/facts.hpp"

namespace cfisurface {

/// What a callsite provides, or what a function expects.
struct SignatureKey {
  std::vector<TypeExpr> param_types;
  bool return_is_void = true;
  std::optional<std::string> name;
  /// Functions only; a variadic target has no fixed arity and never matches
  /// under the exact-arity predicates.
  bool is_variadic = false;

  std::size_t arity() const noexcept { return param_types.size(); }

  friend bool operator==(const SignatureKey&, const SignatureKey&) = default;
};

SignatureKey callsite_signature(const Callsite& cs);
SignatureKey function_signature(const FunctionRecord& f);

/// Same arity, parameters pairwise identical or both pointers. Return type
/// and name are ignored.
bool match_safe(const SignatureKey& callsite, const SignatureKey& function);

/// Same arity, parameters pairwise identical. Return type and name are ignored.
bool match_src(const SignatureKey& callsite, const SignatureKey& function);

/// Both names present and equal, parameters pairwise identical. Return type
/// is ignored since overriders may return covariant types.
bool match_strict(const SignatureKey& callsite, const SignatureKey& function);

/// match_strict with pointer parameters treated as interchangeable.
bool match_strict_pointer_interchange(const SignatureKey& callsite, const SignatureKey& function);

/// Parameter-only canonical strings usable as hash keys. Two signatures match
/// under match_src (match_safe) iff their exact (erased) keys are equal.
std::string exact_param_key(const std::vector<TypeExpr>& params);
std::string pointer_erased_param_key(const std::vector<TypeExpr>& params);

}  // namespace cfisurface
