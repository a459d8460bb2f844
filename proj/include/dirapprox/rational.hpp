#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace dirapprox {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Exact binary value of a finite double.
inline Rational exact_rational(double v) { return Rational(v); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace dirapprox
