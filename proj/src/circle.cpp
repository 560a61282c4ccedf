#include "cantorlab/circle.hpp"

#include <cmath>

namespace cantorlab {

CirclePoint::CirclePoint(const Rational& x) : value_(x.frac()) {}

CirclePoint reduce_to_circle(const Rational& x) { return CirclePoint(x); }

Rational circle_distance(const CirclePoint& x, const CirclePoint& y) {
    Rational d = (x.value() - y.value()).abs();
    return min(d, Rational(1) - d);
}

double wrap01(double x) {
    double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;
}

double circle_distance(double x, double y) {
    double d = std::fabs(wrap01(x) - wrap01(y));
    return std::min(d, 1.0 - d);
}

}  // namespace cantorlab
