// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/motion.hpp"

#include "lagm/error.hpp"

#include <cmath>
#include <numbers>

namespace lagm {

namespace {

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a < 0.0) a += two_pi;
    return a - std::numbers::pi;
}

Eigen::Vector3d joint(const PositionTrack& p, Index frame, int j) {
    return {p(frame, 3 * j), p(frame, 3 * j + 1), p(frame, 3 * j + 2)};
}

}  // namespace

Eigen::Vector3d rotate_yaw(const Eigen::Vector3d& v, double yaw) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * v.x() + s * v.z(), v.y(), -s * v.x() + c * v.z()};
}

void SkeletonSpec::validate() const {
    const auto n = joint_names.size();
    LAGM_CHECK(n >= 1, "skeleton has no joints");
    LAGM_CHECK(parent_index.size() == n && bone_lengths.size() == n, "skeleton arrays disagree in length");
    LAGM_CHECK(parent_index[0] == -1, "joint 0 must be the root");
    for (std::size_t j = 1; j < n; ++j) {
        // parents precede children, which also rules out cycles
        LAGM_CHECK(parent_index[j] >= 0 && static_cast<std::size_t>(parent_index[j]) < j,
                   "joint " + joint_names[j] + " has an invalid parent");
    }
    for (double len : bone_lengths) LAGM_CHECK(len > 0.0, "bone lengths must be positive");
    for (const auto& pair : heel_toe)
        for (int idx : pair) LAGM_CHECK(idx > 0 && static_cast<std::size_t>(idx) < n, "heel/toe index out of range");
}

Matrix SkeletonSpec::rest_offsets() const {
    // Only the desk skeleton carries a rest pose; other skeletons come from data.
    const SkeletonSpec d = desk();
    LAGM_CHECK(joint_names == d.joint_names, "rest pose is only defined for the desk skeleton");
    Matrix r(8, 3);
    r << 0.0, 0.0, 0.0,        // root
        0.0, 0.7, 0.0,          // head
        0.35, 0.0, 0.05,        // left hand
        -0.35, 0.0, 0.05,       // right hand
        0.12, -0.9, -0.05,      // left heel
        -0.12, -0.9, -0.05,     // right heel
        0.12, -0.9, 0.15,       // left toe
        -0.12, -0.9, 0.15;      // right toe
    return r;
}

SkeletonSpec SkeletonSpec::desk() {
    SkeletonSpec s;
    s.joint_names = {"root", "head", "left_hand", "right_hand", "left_heel", "right_heel", "left_toe", "right_toe"};
    s.parent_index = {-1, 0, 0, 0, 0, 0, 4, 5};
    const double hand = std::sqrt(0.35 * 0.35 + 0.05 * 0.05);
    const double heel = std::sqrt(0.12 * 0.12 + 0.9 * 0.9 + 0.05 * 0.05);
    s.bone_lengths = {0.9, 0.7, hand, hand, heel, heel, 0.2, 0.2};
    s.heel_toe = {{{4, 6}, {5, 7}}};
    return s;
}

nlohmann::json to_json(const SkeletonSpec& s) {
    return {{"joint_names", s.joint_names},
            {"parent_index", s.parent_index},
            {"bone_lengths", s.bone_lengths},
            {"heel_toe", {{s.heel_toe[0][0], s.heel_toe[0][1]}, {s.heel_toe[1][0], s.heel_toe[1][1]}}}};
}

SkeletonSpec skeleton_from_json(const nlohmann::json& j) {
    SkeletonSpec s;
    s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    s.parent_index = j.at("parent_index").get<std::vector<int>>();
    s.bone_lengths = j.at("bone_lengths").get<std::vector<double>>();
    for (int f = 0; f < 2; ++f)
        for (int k = 0; k < 2; ++k) s.heel_toe[static_cast<std::size_t>(f)][static_cast<std::size_t>(k)] =
                                        j.at("heel_toe").at(f).at(k).get<int>();
    s.validate();
    return s;
}

MotionSequence MotionSequence::slice(Index start, Index count) const {
    LAGM_CHECK(start >= 0 && count >= 1 && start + count <= length(), "motion slice out of range");
    MotionSequence out;
    out.frames = frames.middleRows(start, count);
    out.fps = fps;
    out.joints = joints;
    return out;
}

FeatureStats FeatureStats::fit(const std::vector<const MotionSequence*>& motions, double floor) {
    LAGM_CHECK(!motions.empty(), "feature statistics need at least one motion");
    const Index dim = motions.front()->frames.cols();
    RowVector sum = RowVector::Zero(dim), sq = RowVector::Zero(dim);
    double count = 0.0;
    for (const auto* m : motions) {
        LAGM_CHECK(m->frames.cols() == dim, "motions disagree in feature width");
        sum += m->frames.colwise().sum();
        sq += m->frames.array().square().matrix().colwise().sum();
        count += static_cast<double>(m->length());
    }
    FeatureStats s;
    s.mean = sum / count;
    const RowVector var = (sq / count - s.mean.cwiseProduct(s.mean)).cwiseMax(0.0);
    s.stddev = var.cwiseSqrt().cwiseMax(floor);
    return s;
}

Matrix FeatureStats::normalize(const Matrix& frames) const {
    LAGM_CHECK(frames.cols() == mean.size(), "feature width does not match statistics");
    return (frames.rowwise() - mean).array().rowwise() / stddev.array();
}

Matrix FeatureStats::denormalize(const Matrix& frames) const {
    LAGM_CHECK(frames.cols() == mean.size(), "feature width does not match statistics");
    return (frames.array().rowwise() * stddev.array()).matrix().rowwise() + mean;
}

std::array<double, 4> foot_contacts(const std::array<double, 4>& speeds, double threshold) {
    LAGM_CHECK(threshold > 0.0, "contact threshold must be positive");
    std::array<double, 4> flags{};
    for (std::size_t i = 0; i < 4; ++i) {
        LAGM_CHECK(speeds[i] >= 0.0, "heel/toe speeds must be non-negative");
        flags[i] = speeds[i] < threshold ? 1.0 : 0.0;
    }
    return flags;
}

std::vector<double> facing_yaw(const PositionTrack& positions, const SkeletonSpec& skeleton) {
    std::vector<double> yaw(static_cast<std::size_t>(positions.rows()), 0.0);
    double previous = 0.0;
    for (Index t = 0; t < positions.rows(); ++t) {
        Eigen::Vector3d f = Eigen::Vector3d::Zero();
        for (const auto& [heel, toe] : skeleton.heel_toe) f += joint(positions, t, toe) - joint(positions, t, heel);
        const double planar = std::hypot(f.x(), f.z());
        const double y = planar > 1e-9 ? std::atan2(f.x(), f.z()) : previous;
        yaw[static_cast<std::size_t>(t)] = y;
        previous = y;
    }
    return yaw;
}

MotionSequence extract_features(const PositionTrack& positions, const SkeletonSpec& skeleton, double contact_threshold,
                                double fps) {
    skeleton.validate();
    const int nj = skeleton.joint_count();
    LAGM_CHECK(positions.rows() >= 2, "feature extraction needs at least 2 frames");
    LAGM_CHECK(positions.cols() == 3 * nj, "position array must be L x N_j x 3");
    if (!positions.allFinite()) throw NumericError("joint coordinates contain non-finite values");

    const FeatureLayout layout{nj};
    const Index frames = positions.rows() - 1;
    const auto yaw = facing_yaw(positions, skeleton);

    MotionSequence out;
    out.fps = fps;
    out.joints = nj;
    out.frames = Matrix::Zero(frames, layout.dim());
    const Eigen::Vector3d up(0.0, 1.0, 0.0);
    const Eigen::Vector3d forward(0.0, 0.0, 1.0);

    for (Index t = 0; t < frames; ++t) {
        const double y0 = yaw[static_cast<std::size_t>(t)];
        const double y1 = yaw[static_cast<std::size_t>(t + 1)];
        const Eigen::Vector3d root = joint(positions, t, 0);
        const Eigen::Vector3d root_next = joint(positions, t + 1, 0);
        const Eigen::Vector3d root_vel = rotate_yaw(root_next - root, -y0);
        auto row = out.frames.row(t);
        row(FeatureLayout::root_angular) = wrap_angle(y1 - y0);
        row(FeatureLayout::root_vel_x) = root_vel.x();
        row(FeatureLayout::root_vel_z) = root_vel.z();
        row(FeatureLayout::root_height) = root.y();

        const Eigen::Vector3d ground_origin(root.x(), 0.0, root.z());
        for (int j = 0; j < nj; ++j) {
            const Eigen::Vector3d p = joint(positions, t, j);
            const Eigen::Vector3d local = rotate_yaw(p - ground_origin, -y0);
            const Eigen::Vector3d vel = rotate_yaw(joint(positions, t + 1, j) - p, -y0);
            for (int k = 0; k < 3; ++k) {
                row(layout.positions() + 3 * j + k) = local(k);
                row(layout.velocities() + 3 * j + k) = vel(k);
            }
            Eigen::Vector3d c0 = Eigen::Vector3d::UnitX();
            Eigen::Vector3d c1 = Eigen::Vector3d::UnitY();
            const int parent = skeleton.parent_index[static_cast<std::size_t>(j)];
            if (parent >= 0) {
                const Eigen::Vector3d bone = rotate_yaw(p - joint(positions, t, parent), -y0);
                if (bone.norm() > 1e-12) {
                    c0 = bone.normalized();
                    Eigen::Vector3d ref = up - up.dot(c0) * c0;
                    if (ref.norm() < 1e-6) ref = forward - forward.dot(c0) * c0;
                    c1 = ref.normalized();
                }
            }
            for (int k = 0; k < 3; ++k) {
                row(layout.rotations() + 6 * j + k) = c0(k);
                row(layout.rotations() + 6 * j + 3 + k) = c1(k);
            }
        }

        std::array<double, 4> speeds{};
        std::size_t slot = 0;
        for (const auto& pair : skeleton.heel_toe)
            for (int idx : pair)
                speeds[slot++] = (joint(positions, t + 1, idx) - joint(positions, t, idx)).norm();
        const auto flags = foot_contacts(speeds, contact_threshold);
        for (int k = 0; k < 4; ++k) row(layout.contacts() + k) = flags[static_cast<std::size_t>(k)];
    }
    return out;
}

RootTrajectory recover_root_trajectory(const MotionSequence& motion, double initial_yaw, double initial_x,
                                       double initial_z) {
    const Index frames = motion.length();
    RootTrajectory traj;
    traj.positions = Matrix::Zero(frames + 1, 3);
    traj.yaw.resize(static_cast<std::size_t>(frames + 1));
    double yaw = initial_yaw;
    Eigen::Vector3d p(initial_x, frames > 0 ? motion.frames(0, FeatureLayout::root_height) : 0.0, initial_z);
    for (Index t = 0; t < frames; ++t) {
        const auto row = motion.frames.row(t);
        p.y() = row(FeatureLayout::root_height);
        traj.positions.row(t) = p.transpose();
        traj.yaw[static_cast<std::size_t>(t)] = yaw;
        const Eigen::Vector3d local(row(FeatureLayout::root_vel_x), 0.0, row(FeatureLayout::root_vel_z));
        p += rotate_yaw(local, yaw);
        yaw += row(FeatureLayout::root_angular);
    }
    traj.positions.row(frames) = p.transpose();
    traj.yaw[static_cast<std::size_t>(frames)] = yaw;
    return traj;
}

PositionTrack reconstruct_positions(const MotionSequence& motion) {
    const auto traj = recover_root_trajectory(motion);
    const FeatureLayout layout = motion.layout();
    PositionTrack out(motion.length(), 3 * motion.joints);
    for (Index t = 0; t < motion.length(); ++t) {
        const double yaw = traj.yaw[static_cast<std::size_t>(t)];
        const Eigen::Vector3d origin(traj.positions(t, 0), 0.0, traj.positions(t, 2));
        for (int j = 0; j < motion.joints; ++j) {
            Eigen::Vector3d local;
            for (int k = 0; k < 3; ++k) local(k) = motion.frames(t, layout.positions() + 3 * j + k);
            const Eigen::Vector3d world = rotate_yaw(local, yaw) + origin;
            for (int k = 0; k < 3; ++k) out(t, 3 * j + k) = world(k);
        }
    }
    return out;
}

nlohmann::json motion_export(const MotionSequence& motion, const SkeletonSpec& skeleton) {
    const PositionTrack positions = reconstruct_positions(motion);
    nlohmann::json frames = nlohmann::json::array();
    for (Index t = 0; t < positions.rows(); ++t) {
        std::vector<double> row(positions.row(t).data(), positions.row(t).data() + positions.cols());
        frames.push_back(std::move(row));
    }
    return {{"skeleton", to_json(skeleton)}, {"fps", motion.fps}, {"frame_count", positions.rows()},
            {"positions", std::move(frames)}};
}

}  // namespace lagm
