// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/tensor.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <vector>

namespace lagm {

/// Kinematic tree used for feature extraction and playback.
struct SkeletonSpec {
    std::vector<std::string> joint_names;
    std::vector<int> parent_index;     // -1 for the root
    std::vector<double> bone_lengths;  // root entry holds the standing root height
    /// {{left heel, left toe}, {right heel, right toe}}
    std::array<std::array<int, 2>, 2> heel_toe{};

    int joint_count() const { return static_cast<int>(joint_names.size()); }
    /// Throws InvalidArgument when any structural invariant fails.
    void validate() const;

    /// Body-frame rest offsets (N x 3, root-relative, facing +z, left is +x).
    Matrix rest_offsets() const;

    /// Eight joints: root, head, two hands, two heels, two toes.
    static SkeletonSpec desk();

    bool operator==(const SkeletonSpec&) const = default;
};

nlohmann::json to_json(const SkeletonSpec& skeleton);
SkeletonSpec skeleton_from_json(const nlohmann::json& j);

/// Column offsets of the per-frame feature tuple
/// (r^a, r^x, r^z, r^y, joint positions, joint velocities, 6D rotations, contacts).
struct FeatureLayout {
    int joints = 0;

    static constexpr int root_angular = 0;
    static constexpr int root_vel_x = 1;
    static constexpr int root_vel_z = 2;
    static constexpr int root_height = 3;
    int positions() const { return 4; }
    int velocities() const { return 4 + 3 * joints; }
    int rotations() const { return 4 + 6 * joints; }
    int contacts() const { return 4 + 12 * joints; }
    int dim() const { return 8 + 12 * joints; }
};

inline int feature_dim(int joints) { return FeatureLayout{joints}.dim(); }

struct MotionSequence {
    Matrix frames;  // L x feature_dim
    double fps = 20.0;
    int joints = 8;

    Index length() const { return frames.rows(); }
    FeatureLayout layout() const { return {joints}; }
    /// Frames [start, start + count) as an independent sequence.
    MotionSequence slice(Index start, Index count) const;
    bool operator==(const MotionSequence& o) const {
        return fps == o.fps && joints == o.joints && frames.rows() == o.frames.rows() &&
               frames.cols() == o.frames.cols() && frames == o.frames;
    }
};

/// Per-column standardization fitted on a set of motions.
struct FeatureStats {
    RowVector mean;
    RowVector stddev;  // floored so constant columns stay finite

    static FeatureStats fit(const std::vector<const MotionSequence*>& motions, double floor = 1e-2);
    Matrix normalize(const Matrix& frames) const;
    Matrix denormalize(const Matrix& frames) const;
    bool operator==(const FeatureStats& o) const { return mean == o.mean && stddev == o.stddev; }
};

/// Raw joint coordinates: one row per frame, joint j in columns [3j, 3j+3).
using PositionTrack = Matrix;

inline constexpr double kDefaultContactThreshold = 0.02;  // meters per frame
inline constexpr double kDefaultFps = 20.0;

/// Flags 1 where speed < threshold (strict).
std::array<double, 4> foot_contacts(const std::array<double, 4>& heel_toe_speeds, double threshold);

/// Converts L+1 frames of positions into L feature frames. Velocities are
/// forward differences expressed in the root frame at the earlier frame.
MotionSequence extract_features(const PositionTrack& positions, const SkeletonSpec& skeleton,
                                double contact_threshold = kDefaultContactThreshold, double fps = kDefaultFps);

/// Facing yaw per frame derived from the heel-to-toe directions.
std::vector<double> facing_yaw(const PositionTrack& positions, const SkeletonSpec& skeleton);

struct RootTrajectory {
    Matrix positions;  // (L+1) x 3
    std::vector<double> yaw;  // L+1 entries
};

/// Integrates root angular and linear velocities starting from the given pose.
RootTrajectory recover_root_trajectory(const MotionSequence& motion, double initial_yaw = 0.0,
                                       double initial_x = 0.0, double initial_z = 0.0);

/// World-space joint positions (L frames) rebuilt from root-space features.
PositionTrack reconstruct_positions(const MotionSequence& motion);

/// Playback document: skeleton, fps and raw joint positions.
nlohmann::json motion_export(const MotionSequence& motion, const SkeletonSpec& skeleton);

/// Rotation of a vector about +y by `yaw` (x' = c x + s z, z' = -s x + c z).
Eigen::Vector3d rotate_yaw(const Eigen::Vector3d& v, double yaw);

}  // namespace lagm
