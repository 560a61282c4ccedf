#pragma once

#include "cantorlab/rational.hpp"

namespace cantorlab {

/// A point of the circle R/Z, stored by its representative in [0, 1).
class CirclePoint {
public:
    CirclePoint() = default;
    /// Reduces any rational modulo one.
    explicit CirclePoint(const Rational& x);

    const Rational& value() const { return value_; }
    double to_double() const { return value_.to_double(); }

    friend bool operator==(const CirclePoint&, const CirclePoint&) = default;

private:
    Rational value_{0};
};

CirclePoint reduce_to_circle(const Rational& x);

/// Quotient distance min(|x - y|, 1 - |x - y|); never exceeds 1/2.
Rational circle_distance(const CirclePoint& x, const CirclePoint& y);

/// Floating-point counterparts used by the Monte Carlo code.
double wrap01(double x);
double circle_distance(double x, double y);

}  // namespace cantorlab
