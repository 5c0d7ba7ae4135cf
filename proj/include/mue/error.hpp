#pragma once

#include <stdexcept>
#include <string>

namespace mue {

//! Base of every error raised by the library. Carries a short category tag so
//! the CLI can map failures onto stable exit codes without RTTI games.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

private:
  std::string category_;
};

#define MUE_DEFINE_ERROR(Name, tag)                                         \
  class Name : public Error {                                               \
  public:                                                                   \
    explicit Name(const std::string& what) : Error(tag, what) {}            \
  };

MUE_DEFINE_ERROR(SchemaError, "schema")
MUE_DEFINE_ERROR(ReferentialError, "referential")
MUE_DEFINE_ERROR(ValidationError, "validation")
MUE_DEFINE_ERROR(DomainError, "domain")
MUE_DEFINE_ERROR(ContractViolation, "contract")
MUE_DEFINE_ERROR(InfeasibleError, "infeasible")
MUE_DEFINE_ERROR(DivergenceError, "divergence")
MUE_DEFINE_ERROR(UndefinedError, "undefined")
MUE_DEFINE_ERROR(UnsupportedError, "unsupported")
MUE_DEFINE_ERROR(FitError, "fit")

#undef MUE_DEFINE_ERROR

}  // namespace mue
