#pragma once

// Generated by tests/oracles/compute_oracles.py; do not edit by hand.

#include <array>

namespace nvsense::oracle {

// argmax |f|/theta on a 2e6-point grid (resolution 3.14e-06 rad).
inline constexpr double kThetaOptGrid = 5.83177935540673;
inline constexpr double kFilterAtOneEightFiveSixPi = 3.8484589971395256;
inline constexpr double kObjectiveAtOneEightFiveSixPi = 0.6600229231478811;
// (0.01/2) e^(-1/2) 2.5e-7
inline constexpr double kDcWeightExample = 7.581633246407917e-10;

// r(sigma') for sigma' = 0, 0.01, ..., 0.10 by quadrature over the extreme
// value densities of four standard normals.
inline constexpr std::array<double, 11> kRatioQuadrature{
    1.0,
    1.0156328864942055,
    1.031664972639283,
    1.048119622930386,
    1.065022156651785,
    1.0824001007674435,
    1.100283486631603,
    1.11870520091194,
    1.1377014043335605,
    1.1573120363732459,
    1.1775814305500578,
};

// Brute-force numpy Monte Carlo (2e6 samples) of the same quantity, with its
// standard error.
inline constexpr std::array<double, 11> kRatioBruteForce{
    1.0,
    1.0156372780139973,
    1.0316742850227052,
    1.0481344238218795,
    1.0650430563623412,
    1.0824277571886158,
    1.100318610775518,
    1.1187485631583909,
    1.1377538414590715,
    1.1573744594087536,
    1.1776548334341448,
};
inline constexpr std::array<double, 11> kRatioBruteForceStderr{
    0.0,
    5.680008409009705e-06,
    1.1637418529970515e-05,
    1.7896558054946552e-05,
    2.4484618279255804e-05,
    3.1432153816185564e-05,
    3.877369838110708e-05,
    4.654853294720425e-05,
    5.480165737596634e-05,
    6.358503927627476e-05,
    7.295924972516203e-05,
};

}  // namespace nvsense::oracle
