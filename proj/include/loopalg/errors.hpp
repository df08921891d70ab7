#ifndef LOOPALG_ERRORS_HPP
#define LOOPALG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace loopalg {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Division by a non-monomial expression whose inverse cannot be represented.
struct NotInvertible : Error {
  explicit NotInvertible(const std::string& msg) : Error(msg) {}
};

struct DivisionByZero : Error {
  explicit DivisionByZero(const std::string& msg) : Error(msg) {}
};

// integrate_dx input is not in the image of the total derivative.
struct NotExact : Error {
  explicit NotExact(const std::string& msg) : Error(msg) {}
};

// homotopy reconstruction failed the a-posteriori Euler check.
struct NotVariational : Error {
  explicit NotVariational(const std::string& msg) : Error(msg) {}
};

struct Degenerate : Error {
  explicit Degenerate(const std::string& msg) : Error(msg) {}
};

struct NotSemisimple : Error {
  explicit NotSemisimple(const std::string& msg) : Error(msg) {}
};

// The two construction routes for the deformation representative disagree.
struct MismatchSZ22 : Error {
  explicit MismatchSZ22(const std::string& msg) : Error(msg) {}
};

// Linear solve ran out of ansatz directions; not a proof of inequivalence.
struct AnsatzExhausted : Error {
  explicit AnsatzExhausted(const std::string& msg) : Error(msg) {}
};

struct InvalidDeformation : Error {
  explicit InvalidDeformation(const std::string& msg) : Error(msg) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error(msg) {}
};

struct NotGradable : Error {
  explicit NotGradable(const std::string& msg) : Error(msg) {}
};

}  // namespace loopalg

#endif
