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

#include <mixsafe/geometry.hpp>
#include <mixsafe/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace mixsafe {
namespace geometry {

namespace {

constexpr double kDedupTolerance = 1e-6;

double cross(const Point& a, const Point& b)
{
  return a.x()*b.y() - a.y()*b.x();
}

//==============================================================================
double point_segment_distance(const Point& p, const Point& a, const Point& b)
{
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t*ab)).norm();
}

//==============================================================================
std::array<Point, 4> separating_axes(const Footprint& a, const Footprint& b)
{
  const Point fa = a.center.forward();
  const Point fb = b.center.forward();
  return {fa, Point(-fa.y(), fa.x()), fb, Point(-fb.y(), fb.x())};
}

//==============================================================================
std::pair<double, double> project(
  const std::array<Point, 4>& corners,
  const Point& axis)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : corners)
  {
    const double d = c.dot(axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

//==============================================================================
// Intersection of segments [p, p + r] and [q, q + s], including endpoints.
// Parallel and collinear pairs are not transversal and yield nothing.
std::optional<Point> segment_crossing(
  const Point& p, const Point& p2,
  const Point& q, const Point& q2)
{
  const Point r = p2 - p;
  const Point s = q2 - q;
  const double denom = cross(r, s);
  const double scale = r.norm()*s.norm();
  if (std::abs(denom) <= 1e-12*scale)
    return std::nullopt;

  const Point qp = q - p;
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  constexpr double eps = 1e-12;
  if (t < -eps || t > 1.0 + eps || u < -eps || u > 1.0 + eps)
    return std::nullopt;

  return p + std::clamp(t, 0.0, 1.0)*r;
}

//==============================================================================
void append_crossings(
  const Path& a,
  const Path& b,
  std::vector<ConflictPoint>& out)
{
  const auto& wa = a.waypoints();
  const auto& wb = b.waypoints();
  const std::size_t first = out.size();
  for (std::size_t i = 0; i + 1 < wa.size(); ++i)
  {
    for (std::size_t j = 0; j + 1 < wb.size(); ++j)
    {
      const auto hit = segment_crossing(wa[i], wa[i+1], wb[j], wb[j+1]);
      if (!hit)
        continue;

      const bool duplicate = std::any_of(
        out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
        [&](const ConflictPoint& c)
        {
          return (c.position - *hit).norm() <= kDedupTolerance;
        });

      if (!duplicate)
        out.push_back({*hit, a.id(), b.id()});
    }
  }
}

} // anonymous namespace

//==============================================================================
double normalize_angle(double angle)
{
  constexpr double pi = std::numbers::pi;
  double r = std::remainder(angle, 2.0*pi);
  if (r <= -pi)
    r += 2.0*pi;
  return r;
}

//==============================================================================
Pose2D::Pose2D(double x, double y, double heading)
: _x(x),
  _y(y),
  _heading(normalize_angle(heading))
{
  // Do nothing
}

//==============================================================================
Point Pose2D::forward() const
{
  return Point(std::cos(_heading), std::sin(_heading));
}

//==============================================================================
Path::Path(int id, std::vector<Point> waypoints)
: _id(id),
  _waypoints(std::move(waypoints))
{
  if (_waypoints.size() < 2)
  {
    throw ValidationError(
      "path " + std::to_string(_id) + " needs at least two waypoints");
  }

  _cumulative.reserve(_waypoints.size());
  _cumulative.push_back(0.0);
  for (std::size_t i = 1; i < _waypoints.size(); ++i)
  {
    if (!_waypoints[i].allFinite())
      throw ValidationError("path " + std::to_string(_id) + " has non-finite waypoints");

    const double step = (_waypoints[i] - _waypoints[i-1]).norm();
    if (step <= 0.0)
    {
      throw ValidationError(
        "path " + std::to_string(_id) + " repeats waypoint "
        + std::to_string(i));
    }
    _cumulative.push_back(_cumulative.back() + step);
  }
}

//==============================================================================
const Path& PathNetwork::path(int id) const
{
  for (const auto& p : robot_paths)
  {
    if (p.id() == id)
      return p;
  }

  for (const auto& p : vehicle_lanes)
  {
    if (p.id() == id)
      return p;
  }

  throw LookupError("unknown path id " + std::to_string(id));
}

//==============================================================================
std::array<Point, 4> Footprint::corners() const
{
  const Point f = center.forward()*half_length;
  const Point l = Point(-center.forward().y(), center.forward().x())*half_width;
  const Point c = center.position();
  return {c + f - l, c + f + l, c - f + l, c - f - l};
}

//==============================================================================
Pose2D pose_on_path(const Path& path, double s)
{
  const auto& cum = path.cumulative_lengths();
  if (!(s >= 0.0 && s <= path.length()))
  {
    std::ostringstream msg;
    msg << "arc distance " << s << " outside path " << path.id()
        << " of length " << path.length();
    throw RangeError(msg.str());
  }

  // Index of the segment [cum[i], cum[i+1]] that holds s.
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(cum.begin(), it));
  i = std::clamp<std::size_t>(i, 1, cum.size() - 1) - 1;

  const auto& w = path.waypoints();
  const Point seg = w[i+1] - w[i];
  const double seg_len = cum[i+1] - cum[i];
  const double t = (s - cum[i]) / seg_len;
  const Point p = w[i] + t*seg;
  return Pose2D(p.x(), p.y(), std::atan2(seg.y(), seg.x()));
}

//==============================================================================
PathProjection project_onto_path(const Path& path, const Point& point)
{
  const auto& w = path.waypoints();
  const auto& cum = path.cumulative_lengths();

  PathProjection best{0.0, 0.0, 0.0};
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
  {
    const Point seg = w[i+1] - w[i];
    const double len = cum[i+1] - cum[i];
    const Point dir = seg / len;
    const double along = std::clamp((point - w[i]).dot(dir), 0.0, len);
    const Point foot = w[i] + along*dir;
    const double dist = (point - foot).norm();
    if (dist < best_dist)
    {
      best_dist = dist;
      best.arc = cum[i] + along;
      best.lateral = cross(dir, point - w[i]);
      best.heading = std::atan2(dir.y(), dir.x());
    }
  }

  // Past either end the arc keeps growing linearly so that progress beyond
  // the final waypoint is still measurable.
  const Point first_dir = (w[1] - w[0]).normalized();
  const double before = (point - w[0]).dot(first_dir);
  if (before < 0.0 && best.arc == 0.0)
    best.arc = before;

  const std::size_t n = w.size();
  const Point last_dir = (w[n-1] - w[n-2]).normalized();
  const double beyond = (point - w[n-1]).dot(last_dir);
  if (beyond > 0.0 && best.arc == path.length())
    best.arc = path.length() + beyond;

  return best;
}

//==============================================================================
double distance_to_path(const Path& path, const Point& point)
{
  const auto& w = path.waypoints();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    best = std::min(best, point_segment_distance(point, w[i], w[i+1]));
  return best;
}

//==============================================================================
double penetration_depth(const Footprint& a, const Footprint& b)
{
  const auto ca = a.corners();
  const auto cb = b.corners();
  double depth = std::numeric_limits<double>::infinity();
  for (const auto& axis : separating_axes(a, b))
  {
    const auto [a_lo, a_hi] = project(ca, axis);
    const auto [b_lo, b_hi] = project(cb, axis);
    depth = std::min(depth, std::min(a_hi, b_hi) - std::max(a_lo, b_lo));
  }
  return depth;
}

//==============================================================================
bool footprints_intersect(const Footprint& a, const Footprint& b)
{
  const auto ca = a.corners();
  const auto cb = b.corners();
  for (const auto& axis : separating_axes(a, b))
  {
    const auto [a_lo, a_hi] = project(ca, axis);
    const auto [b_lo, b_hi] = project(cb, axis);
    if (a_hi < b_lo || b_hi < a_lo)
      return false;
  }
  return true;
}

//==============================================================================
double min_separation(const Footprint& a, const Footprint& b)
{
  if (footprints_intersect(a, b))
    return 0.0;

  // For disjoint convex polygons the closest pair always involves a vertex.
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i)
  {
    const std::size_t j = (i + 1) % 4;
    for (const auto& p : cb)
      best = std::min(best, point_segment_distance(p, ca[i], ca[j]));
    for (const auto& p : ca)
      best = std::min(best, point_segment_distance(p, cb[i], cb[j]));
  }
  return best;
}

//==============================================================================
std::vector<ConflictPoint> compute_conflict_points(const PathNetwork& network)
{
  std::vector<ConflictPoint> out;
  const auto& robots = network.robot_paths;
  for (const auto& robot : robots)
  {
    for (const auto& lane : network.vehicle_lanes)
      append_crossings(robot, lane, out);
  }

  for (std::size_t i = 0; i < robots.size(); ++i)
  {
    for (std::size_t j = i + 1; j < robots.size(); ++j)
      append_crossings(robots[i], robots[j], out);
  }

  return out;
}

//==============================================================================
PathNetwork build_default_intersection(const IntersectionLayout& layout)
{
  PathNetwork network;

  const double half = layout.arterial_length / 2.0;
  const double w = layout.lane_width;
  const double curb = w*layout.lanes_per_direction;
  const double span = layout.corridor_half_span;

  // Eastbound lanes sit below the centerline, westbound lanes above it.
  int lane_id = 10;
  for (int k = 0; k < layout.lanes_per_direction; ++k)
  {
    const double y = -(k + 0.5)*w;
    network.vehicle_lanes.emplace_back(
      lane_id++, std::vector<Point>{Point(-half, y), Point(half, y)});
  }
  for (int k = 0; k < layout.lanes_per_direction; ++k)
  {
    const double y = (k + 0.5)*w;
    network.vehicle_lanes.emplace_back(
      lane_id++, std::vector<Point>{Point(half, y), Point(-half, y)});
  }

  // Perpendicular corridors alternate direction and have a waypoint at each
  // curb so the crossing segment is explicit.
  int robot_id = 0;
  for (std::size_t k = 0; k < layout.corridor_x.size(); ++k)
  {
    const double x = layout.corridor_x[k];
    const double dir = (k % 2 == 0) ? 1.0 : -1.0;
    network.robot_paths.emplace_back(
      robot_id++,
      std::vector<Point>{
        Point(x, -dir*span), Point(x, -dir*curb),
        Point(x, dir*curb), Point(x, dir*span)});
  }

  const double run = layout.diagonal_half_run;
  network.robot_paths.emplace_back(
    robot_id++, std::vector<Point>{Point(-run, -span), Point(run, span)});
  network.robot_paths.emplace_back(
    robot_id++, std::vector<Point>{Point(run, -span), Point(-run, span)});

  network.conflict_points = compute_conflict_points(network);
  return network;
}

} // namespace geometry
} // namespace mixsafe
