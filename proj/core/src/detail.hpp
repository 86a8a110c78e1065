#pragma once

// Internal helpers shared between translation units.

namespace fanomech::detail {

long double kappa_eff_minus_of(long double ka, long double kd, long double gamma_a,
                               long double theta);
long double kappa_eff_plus_of(long double ka, long double kd, long double gamma_a,
                              long double theta);

}  // namespace fanomech::detail
