/*
 Copyright 2026 The hjlss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef HJLSS_CONTOUR_HPP
#define HJLSS_CONTOUR_HPP

// Sampled 2-D slices, marching-squares level sets and an SVG writer.

#include "hjlss/io.hpp"

#include <array>

namespace hjlss {

/// Row-major field values[i * ny + j] at (xs[i], ys[j]).
struct Field2D {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;

  std::size_t nx() const { return xs.size(); }
  std::size_t ny() const { return ys.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * ys.size() + j]; }
};

struct Segment {
  std::array<double, 2> a;
  std::array<double, 2> b;
};

/// Segments of {f = level} by marching squares with linear edge
/// interpolation. Saddle cells are resolved by the cell-centre average.
inline std::vector<Segment> marching_squares(const Field2D &f, double level) {
  std::vector<Segment> out;
  if (f.nx() < 2 || f.ny() < 2) return out;
  auto lerp = [&](double x0, double y0, double v0, double x1, double y1, double v1) {
    const double s = v1 == v0 ? 0.5 : (level - v0) / (v1 - v0);
    return std::array<double, 2>{x0 + s * (x1 - x0), y0 + s * (y1 - y0)};
  };
  for (std::size_t i = 0; i + 1 < f.nx(); ++i) {
    for (std::size_t j = 0; j + 1 < f.ny(); ++j) {
      const double x0 = f.xs[i], x1 = f.xs[i + 1], y0 = f.ys[j], y1 = f.ys[j + 1];
      // Corners counter-clockwise: (x0,y0), (x1,y0), (x1,y1), (x0,y1).
      const double v[4] = {f.at(i, j), f.at(i + 1, j), f.at(i + 1, j + 1), f.at(i, j + 1)};
      int code = 0;
      for (int k = 0; k < 4; ++k)
        if (v[k] < level) code |= 1 << k;
      if (code == 0 || code == 15) continue;
      const std::array<double, 2> e[4] = {
          lerp(x0, y0, v[0], x1, y0, v[1]), // bottom
          lerp(x1, y0, v[1], x1, y1, v[2]), // right
          lerp(x1, y1, v[2], x0, y1, v[3]), // top
          lerp(x0, y1, v[3], x0, y0, v[0]), // left
      };
      auto seg = [&](int p, int q) { out.push_back({e[p], e[q]}); };
      switch (code) {
      case 1: case 14: seg(3, 0); break;
      case 2: case 13: seg(0, 1); break;
      case 3: case 12: seg(3, 1); break;
      case 4: case 11: seg(1, 2); break;
      case 6: case 9: seg(0, 2); break;
      case 7: case 8: seg(2, 3); break;
      case 5: case 10: {
        const bool centre_below = 0.25 * (v[0] + v[1] + v[2] + v[3]) < level;
        if ((code == 5) == centre_below) {
          seg(3, 2);
          seg(0, 1);
        } else {
          seg(3, 0);
          seg(1, 2);
        }
        break;
      }
      default: break;
      }
    }
  }
  return out;
}

inline void write_field_csv(std::ostream &os, const Field2D &f, const std::string &xname,
                            const std::string &yname) {
  os << xname << ',' << yname << ",value\n";
  for (std::size_t i = 0; i < f.nx(); ++i)
    for (std::size_t j = 0; j < f.ny(); ++j)
      os << fmt_double(f.xs[i]) << ',' << fmt_double(f.ys[j]) << ',' << fmt_double(f.at(i, j))
         << '\n';
}

struct ContourLayer {
  std::vector<Segment> segments;
  std::string colour;
  std::string label;
};

/// SVG of the slice bounds with one polyline group per layer.
inline std::string contour_svg(const Field2D &f, const std::vector<ContourLayer> &layers,
                               int size_px = 480) {
  const double xl = f.xs.front(), xh = f.xs.back(), yl = f.ys.front(), yh = f.ys.back();
  const double sx = size_px / (xh - xl), sy = size_px / (yh - yl);
  auto px = [&](double x) { return (x - xl) * sx; };
  auto py = [&](double y) { return size_px - (y - yl) * sy; };
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_px << "\" height=\""
     << size_px << "\" viewBox=\"0 0 " << size_px << ' ' << size_px << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"black\"/>\n";
  for (const auto &l : layers) {
    os << "<g stroke=\"" << l.colour << "\" stroke-width=\"1.5\" fill=\"none\"><title>" << l.label
       << "</title>\n";
    for (const auto &s : l.segments)
      os << "<line x1=\"" << px(s.a[0]) << "\" y1=\"" << py(s.a[1]) << "\" x2=\"" << px(s.b[0])
         << "\" y2=\"" << py(s.b[1]) << "\"/>\n";
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace hjlss

#endif // HJLSS_CONTOUR_HPP
