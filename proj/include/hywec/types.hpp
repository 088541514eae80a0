#pragma once

#include <Eigen/Dense>
#include <array>
#include <string_view>

namespace hywec {

// State ordering X = [q1, q1', q2, q2', ..., q6, q6'] (displacement/velocity interleaved).
// Modes: platform surge q1, platform pitch q2, platform heave q3, WEC1..WEC3 pitch q4..q6.
inline constexpr int kNumModes = 6;
inline constexpr int kStateDim = 12;
inline constexpr int kInputDim = 12;
inline constexpr int kRegressorDim = 2 * kStateDim + 1;  // [X; U; 1]

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using State = Eigen::Matrix<double, kStateDim, 1>;
using Input = Eigen::Matrix<double, kInputDim, 1>;
using Regressor = Eigen::Matrix<double, kRegressorDim, 1>;
using ThetaValues = Eigen::Matrix<double, kStateDim, kRegressorDim>;

enum class Mode { Surge = 0, Pitch = 1, Heave = 2, Wec1 = 3, Wec2 = 4, Wec3 = 5 };

inline constexpr std::array<std::string_view, kNumModes> kModeNames = {
    "surge", "pitch", "heave", "wec1", "wec2", "wec3"};

constexpr int displacement_index(int mode) { return 2 * mode; }
constexpr int velocity_index(int mode) { return 2 * mode + 1; }

}  // namespace hywec
