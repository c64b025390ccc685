#pragma once

#include <cmath>

namespace singlet {

/// Real 3-vector r with |r| <= 1, the Bloch representation of a single-qubit
/// density matrix rho = (I + r.sigma)/2. |r| = 1 iff the state is pure.
struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double length_squared() const { return x * x + y * y + z * z; }
    double length() const { return std::sqrt(length_squared()); }

    BlochVector scaled(double f) const { return {f * x, f * y, f * z}; }

    double dot(const BlochVector& o) const { return x * o.x + y * o.y + z * o.z; }

    BlochVector operator+(const BlochVector& o) const { return {x + o.x, y + o.y, z + o.z}; }
    BlochVector operator-(const BlochVector& o) const { return {x - o.x, y - o.y, z - o.z}; }

    /// Unit vector along this direction; zero vector is returned unchanged.
    BlochVector normalized() const {
        const double len = length();
        if (len == 0.0) return {0, 0, 0};
        return scaled(1.0 / len);
    }
};

inline BlochVector cross(const BlochVector& a, const BlochVector& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

} // namespace singlet
