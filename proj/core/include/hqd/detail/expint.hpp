#pragma once

#include <complex>

namespace hqd::detail {

// Principal-branch exponential integral E1(z) for complex z, |arg z| < pi.
// Power series for small |z|, modified-Lentz continued fraction otherwise.
std::complex<double> expint_e1(std::complex<double> z);

} // namespace hqd::detail
