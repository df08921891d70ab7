#ifndef LOOPALG_RATIONAL_HPP
#define LOOPALG_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace loopalg {

// Exact rational scalar type. Expression templates are disabled so Rat
// behaves like a plain value type.
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;
using Rat = boost::multiprecision::number<
    boost::multiprecision::backends::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;

inline Rat rat(std::int64_t num, std::int64_t den = 1) { return Rat(num, den); }

std::string rat_to_string(const Rat& r);

// Parses "3", "-3/8", "007/2". Throws std::invalid_argument on malformed input.
Rat rat_from_string(const std::string& s);

Rat rat_pow(const Rat& base, long exp);

double rat_to_double(const Rat& r);

}  // namespace loopalg

#endif
