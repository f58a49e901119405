/*
 * Copyright (C) 2026 The mixsafe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#include <mixsafe/errors.hpp>
#include <mixsafe/geometry.hpp>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace mixsafe::geometry;

namespace {

Footprint random_box(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  std::uniform_real_distribution<double> half(0.2, 2.5);
  return Footprint{Pose2D(pos(rng), pos(rng), ang(rng)), half(rng), half(rng)};
}

bool inside(const Footprint& f, const Point& p)
{
  const Point d = p - f.center.position();
  const double c = std::cos(f.center.heading());
  const double s = std::sin(f.center.heading());
  const double lx = c*d.x() + s*d.y();
  const double ly = -s*d.x() + c*d.y();
  return std::abs(lx) <= f.half_length && std::abs(ly) <= f.half_width;
}

// Samples a grid in the local frame of a and checks each sample against b.
bool raster_overlap(const Footprint& a, const Footprint& b, double h)
{
  const Point fwd = a.center.forward();
  const Point left(-fwd.y(), fwd.x());
  for (double u = -a.half_length; u <= a.half_length + 1e-12; u += h)
  {
    for (double v = -a.half_width; v <= a.half_width + 1e-12; v += h)
    {
      if (inside(b, a.center.position() + u*fwd + v*left))
        return true;
    }
  }
  return false;
}

std::vector<Point> boundary_samples(const Footprint& f, int per_edge)
{
  const auto c = f.corners();
  std::vector<Point> out;
  for (std::size_t i = 0; i < 4; ++i)
  {
    const Point& a = c[i];
    const Point& b = c[(i+1) % 4];
    for (int k = 0; k < per_edge; ++k)
      out.push_back(a + (b - a)*(double(k)/per_edge));
  }
  return out;
}

// Segment crossing from a 2x2 linear solve, independent of the library's
// cross-product formulation.
std::vector<Point> brute_crossings(const Path& a, const Path& b)
{
  std::vector<Point> out;
  const auto& wa = a.waypoints();
  const auto& wb = b.waypoints();
  for (std::size_t i = 0; i + 1 < wa.size(); ++i)
  {
    for (std::size_t j = 0; j + 1 < wb.size(); ++j)
    {
      Eigen::Matrix2d m;
      m.col(0) = wa[i+1] - wa[i];
      m.col(1) = -(wb[j+1] - wb[j]);
      if (std::abs(m.determinant()) < 1e-12)
        continue;
      const Eigen::Vector2d t = m.fullPivLu().solve(wb[j] - wa[i]);
      if (t[0] < 0.0 || t[0] > 1.0 || t[1] < 0.0 || t[1] > 1.0)
        continue;
      const Point p = wa[i] + t[0]*(wa[i+1] - wa[i]);
      bool duplicate = false;
      for (const auto& q : out)
        duplicate = duplicate || (q - p).norm() < 1e-9;
      if (!duplicate)
        out.push_back(p);
    }
  }
  return out;
}

} // anonymous namespace

//==============================================================================
TEST(NormalizeAngle, WrapsIntoHalfOpenInterval)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> any(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i)
  {
    const double a = any(rng);
    const double n = normalize_angle(a);
    EXPECT_GT(n, -M_PI);
    EXPECT_LE(n, M_PI);
    EXPECT_NEAR(std::remainder(a - n, 2.0*M_PI), 0.0, 1e-9);
  }
  EXPECT_DOUBLE_EQ(normalize_angle(-M_PI), M_PI);
}

//==============================================================================
TEST(Path, RejectsDegenerateWaypoints)
{
  EXPECT_THROW(Path(0, {Point(0, 0)}), mixsafe::ValidationError);
  EXPECT_THROW(Path(0, {Point(0, 0), Point(0, 0)}), mixsafe::ValidationError);
  EXPECT_NO_THROW(Path(0, {Point(0, 0), Point(1, 0)}));
}

TEST(Path, PoseOnPathStaysOnPolyline)
{
  const Path path(3, {Point(0, 0), Point(4, 0), Point(4, 3), Point(-2, 7)});
  EXPECT_DOUBLE_EQ(path.length(), 4.0 + 3.0 + std::hypot(6.0, 4.0));
  for (int i = 0; i <= 1000; ++i)
  {
    const double s = path.length()*i/1000.0;
    const Pose2D pose = pose_on_path(path, s);
    EXPECT_LE(distance_to_path(path, pose.position()), 1e-9);
    const auto proj = project_onto_path(path, pose.position());
    EXPECT_NEAR(proj.arc, s, 1e-9);
    EXPECT_NEAR(proj.lateral, 0.0, 1e-9);
  }
}

TEST(Path, ProjectionSignsLateralOffset)
{
  const Path path(0, {Point(0, 0), Point(10, 0)});
  EXPECT_NEAR(project_onto_path(path, Point(3, 2)).lateral, 2.0, 1e-12);
  EXPECT_NEAR(project_onto_path(path, Point(3, -2)).lateral, -2.0, 1e-12);
  EXPECT_NEAR(project_onto_path(path, Point(3, -2)).arc, 3.0, 1e-12);
}

//==============================================================================
TEST(Footprint, CornersAreCounterClockwiseFromFrontRight)
{
  const Footprint f{Pose2D(1, 2, M_PI/2), 2.0, 1.0};
  const auto c = f.corners();
  EXPECT_NEAR(c[0].x(), 2.0, 1e-12);
  EXPECT_NEAR(c[0].y(), 4.0, 1e-12);
  double area = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
  {
    const auto& a = c[i];
    const auto& b = c[(i+1) % 4];
    area += a.x()*b.y() - b.x()*a.y();
  }
  EXPECT_NEAR(area/2.0, 8.0, 1e-12);
}

TEST(Footprint, SatAgreesWithRasterization)
{
  std::mt19937_64 rng(11);
  const double h = 0.02;
  int checked = 0;
  for (int i = 0; i < 1000; ++i)
  {
    const auto a = random_box(rng);
    const auto b = random_box(rng);
    // Skip near-touching pairs the grid cannot resolve.
    const double sep = min_separation(a, b);
    const double depth = footprints_intersect(a, b) ? penetration_depth(a, b) : 0.0;
    if (sep == 0.0 && depth < 2.0*h)
      continue;
    ++checked;
    EXPECT_EQ(footprints_intersect(a, b), raster_overlap(a, b, h)) << "pair " << i;
  }
  EXPECT_GT(checked, 900);
}

TEST(Footprint, SeparationMatchesBoundarySampling)
{
  std::mt19937_64 rng(12);
  const int per_edge = 400;
  for (int i = 0; i < 1000; ++i)
  {
    const auto a = random_box(rng);
    const auto b = random_box(rng);
    const double sep = min_separation(a, b);
    EXPECT_GE(sep, 0.0);
    EXPECT_EQ(sep == 0.0, footprints_intersect(a, b));
    if (sep == 0.0)
      continue;
    double sampled = std::numeric_limits<double>::infinity();
    for (const auto& p : boundary_samples(a, per_edge))
    {
      for (const auto& q : boundary_samples(b, per_edge))
        sampled = std::min(sampled, (p - q).norm());
    }
    // Sampling can only overestimate, by at most one sample spacing.
    EXPECT_LE(sep, sampled + 1e-12);
    EXPECT_LE(sampled - sep, 5.0/per_edge*2.0);
  }
}

TEST(Footprint, SeparationIsSymmetric)
{
  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i)
  {
    const auto a = random_box(rng);
    const auto b = random_box(rng);
    EXPECT_DOUBLE_EQ(min_separation(a, b), min_separation(b, a));
    EXPECT_EQ(footprints_intersect(a, b), footprints_intersect(b, a));
  }
}

TEST(Footprint, TouchingBoxesIntersect)
{
  const Footprint a{Pose2D(0, 0, 0), 1.0, 1.0};
  const Footprint b{Pose2D(2, 0, 0), 1.0, 1.0};
  EXPECT_TRUE(footprints_intersect(a, b));
  EXPECT_DOUBLE_EQ(min_separation(a, b), 0.0);
  const Footprint c{Pose2D(2.5, 0, 0), 1.0, 1.0};
  EXPECT_FALSE(footprints_intersect(a, c));
  EXPECT_NEAR(min_separation(a, c), 0.5, 1e-12);
}

//==============================================================================
TEST(ConflictPoints, DefaultIntersectionMatchesBruteForce)
{
  const PathNetwork network = build_default_intersection();
  std::vector<ConflictPoint> expected;
  for (const auto& robot : network.robot_paths)
  {
    for (const auto& lane : network.vehicle_lanes)
    {
      for (const auto& p : brute_crossings(robot, lane))
        expected.push_back({p, robot.id(), lane.id()});
    }
  }
  for (std::size_t i = 0; i < network.robot_paths.size(); ++i)
  {
    for (std::size_t j = i + 1; j < network.robot_paths.size(); ++j)
    {
      const auto& a = network.robot_paths[i];
      const auto& b = network.robot_paths[j];
      for (const auto& p : brute_crossings(a, b))
        expected.push_back({p, a.id(), b.id()});
    }
  }

  // Four perpendicular corridors and two diagonals cross four lanes each,
  // and the diagonals cross each other once.
  EXPECT_EQ(expected.size(), 25u);
  ASSERT_EQ(network.conflict_points.size(), expected.size());
  for (const auto& e : expected)
  {
    bool found = false;
    for (const auto& c : network.conflict_points)
    {
      found = found || (c.path_a == e.path_a && c.path_b == e.path_b
        && (c.position - e.position).norm() < 1e-9);
    }
    EXPECT_TRUE(found) << e.path_a << " x " << e.path_b;
  }
}

TEST(ConflictPoints, RandomNetworksMatchBruteForce)
{
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  for (int trial = 0; trial < 50; ++trial)
  {
    PathNetwork network;
    for (int k = 0; k < 3; ++k)
    {
      network.robot_paths.emplace_back(
        k, std::vector<Point>{
          Point(coord(rng), coord(rng)), Point(coord(rng), coord(rng)),
          Point(coord(rng), coord(rng))});
      network.vehicle_lanes.emplace_back(
        10 + k, std::vector<Point>{
          Point(coord(rng), coord(rng)), Point(coord(rng), coord(rng))});
    }
    std::size_t expected = 0;
    for (const auto& r : network.robot_paths)
    {
      for (const auto& l : network.vehicle_lanes)
        expected += brute_crossings(r, l).size();
    }
    for (std::size_t i = 0; i < 3; ++i)
    {
      for (std::size_t j = i + 1; j < 3; ++j)
        expected += brute_crossings(network.robot_paths[i], network.robot_paths[j]).size();
    }
    EXPECT_EQ(compute_conflict_points(network).size(), expected) << "trial " << trial;
  }
}

TEST(PathNetwork, LookupByIdCoversBothKinds)
{
  const PathNetwork network = build_default_intersection();
  EXPECT_EQ(network.path(0).id(), 0);
  EXPECT_EQ(network.path(10).id(), 10);
  EXPECT_THROW(network.path(999), mixsafe::LookupError);
}
