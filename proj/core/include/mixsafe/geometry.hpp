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

#ifndef MIXSAFE__GEOMETRY_HPP
#define MIXSAFE__GEOMETRY_HPP

#include <Eigen/Core>

#include <array>
#include <vector>

namespace mixsafe {
namespace geometry {

using Point = Eigen::Vector2d;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

//==============================================================================
class Pose2D
{
public:
  Pose2D() = default;
  Pose2D(double x, double y, double heading);

  double x() const { return _x; }
  double y() const { return _y; }
  double heading() const { return _heading; }
  Point position() const { return Point(_x, _y); }

  /// Unit vector along the heading.
  Point forward() const;

  bool operator==(const Pose2D&) const = default;

private:
  double _x = 0.0;
  double _y = 0.0;
  double _heading = 0.0;
};

//==============================================================================
/// A polyline corridor or lane centerline with arc-length parameterization.
class Path
{
public:
  /// Throws ValidationError unless there are at least two waypoints and no
  /// two consecutive waypoints coincide.
  Path(int id, std::vector<Point> waypoints);

  int id() const { return _id; }
  const std::vector<Point>& waypoints() const { return _waypoints; }
  const std::vector<double>& cumulative_lengths() const { return _cumulative; }
  double length() const { return _cumulative.back(); }

  bool operator==(const Path&) const = default;

private:
  int _id;
  std::vector<Point> _waypoints;
  std::vector<double> _cumulative;
};

//==============================================================================
struct ConflictPoint
{
  Point position;
  int path_a;
  int path_b;

  bool operator==(const ConflictPoint&) const = default;
};

//==============================================================================
struct PathNetwork
{
  std::vector<Path> robot_paths;
  std::vector<Path> vehicle_lanes;
  std::vector<ConflictPoint> conflict_points;

  /// Looks a path up by id among both robot paths and lanes. Throws
  /// LookupError for unknown ids.
  const Path& path(int id) const;

  bool operator==(const PathNetwork&) const = default;
};

//==============================================================================
/// Oriented rectangle occupied by an agent.
struct Footprint
{
  Pose2D center;
  double half_length;
  double half_width;

  /// Counter-clockwise corners, starting front-right.
  std::array<Point, 4> corners() const;
};

//==============================================================================
/// Projection of a point onto a path polyline.
struct PathProjection
{
  /// Arc distance of the closest point on the polyline.
  double arc;

  /// Signed distance from the polyline, positive to the left of travel.
  double lateral;

  /// Heading of the segment that holds the closest point.
  double heading;
};

/// Returns the pose at arc distance s along the path. The heading is the
/// direction of the containing segment. Throws RangeError when s lies outside
/// [0, path.length()].
Pose2D pose_on_path(const Path& path, double s);

PathProjection project_onto_path(const Path& path, const Point& point);

/// Unsigned distance from a point to the path polyline.
double distance_to_path(const Path& path, const Point& point);

/// Separating-axis test over the four edge normals. Touching rectangles
/// intersect.
bool footprints_intersect(const Footprint& a, const Footprint& b);

/// Minimum distance between the two rectangle boundaries, 0 when they
/// intersect.
double min_separation(const Footprint& a, const Footprint& b);

/// Smallest projected overlap among the separating-axis candidates. Zero or
/// negative when the rectangles are separated.
double penetration_depth(const Footprint& a, const Footprint& b);

/// Transversal crossings between every robot path and every lane, and between
/// every pair of robot paths, deduplicated within 1e-6 m.
std::vector<ConflictPoint> compute_conflict_points(const PathNetwork& network);

//==============================================================================
/// Dimensions of the default arterial crossing.
struct IntersectionLayout
{
  double lane_width = 3.5;
  double arterial_length = 120.0;
  int lanes_per_direction = 2;

  /// Lateral positions of the perpendicular corridors.
  std::array<double, 4> corridor_x = {-12.0, -8.0, 8.0, 12.0};

  /// Distance from the road centerline to each corridor end.
  double corridor_half_span = 12.0;

  /// Half extent along the arterial of each diagonal corridor.
  double diagonal_half_run = 6.0;
};

/// Four lane centerlines (two per direction) and six robot corridors (four
/// perpendicular, two diagonal) with conflict points populated. Robot paths
/// carry ids 0..5, lanes 10..13.
PathNetwork build_default_intersection(const IntersectionLayout& layout = {});

} // namespace geometry
} // namespace mixsafe

#endif // MIXSAFE__GEOMETRY_HPP
