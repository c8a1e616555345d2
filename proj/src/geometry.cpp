#include "simplebev/geometry.hpp"

#include <numbers>

namespace simplebev {

double normalize_angle(double a) {
  constexpr double pi = std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  double r = std::remainder(a, 2.0 * pi);
  if (r <= -pi) r += 2.0 * pi;
  if (r > pi) r -= 2.0 * pi;
  return r;
}

}  // namespace simplebev
