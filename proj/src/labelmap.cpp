#include "gcpress/labelmap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gcpress/int_coding.hpp"

namespace gcpress {

void PolygonLabelMap::validate(int width, int height) const {
  for (const auto& obj : objects) {
    if (obj.class_id < 0 || obj.instance_id < 0) throw UsageError("label map: negative class or instance id");
    if (obj.polygon.size() < 3) throw UsageError("label map: polygon needs at least 3 vertices");
    for (const auto& p : obj.polygon)
      if (p.x < 0 || p.y < 0 || p.x > width || p.y > height)
        throw UsageError("label map: vertex (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                         ") outside " + std::to_string(width) + "x" + std::to_string(height));
  }
}

PolygonLabelMap parse_label_map(const std::string& text) {
  PolygonLabelMap map;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    PolygonLabelMap::Object obj;
    if (!(fields >> obj.class_id >> obj.instance_id))
      throw UsageError("label map line " + std::to_string(line_no) + ": expected class and instance ids");
    std::string vertex;
    while (fields >> vertex) {
      const auto comma = vertex.find(',');
      if (comma == std::string::npos)
        throw UsageError("label map line " + std::to_string(line_no) + ": bad vertex '" + vertex + "'");
      try {
        std::size_t used = 0;
        GridPoint p;
        p.x = std::stoi(vertex.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument(vertex);
        const std::string ys = vertex.substr(comma + 1);
        p.y = std::stoi(ys, &used);
        if (used != ys.size()) throw std::invalid_argument(vertex);
        obj.polygon.push_back(p);
      } catch (const std::exception&) {
        throw UsageError("label map line " + std::to_string(line_no) + ": bad vertex '" + vertex + "'");
      }
    }
    map.objects.push_back(std::move(obj));
  }
  return map;
}

std::string format_label_map(const PolygonLabelMap& map) {
  std::ostringstream os;
  for (const auto& obj : map.objects) {
    os << obj.class_id << ' ' << obj.instance_id;
    for (const auto& p : obj.polygon) os << ' ' << p.x << ',' << p.y;
    os << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::uint64_t> label_stream(const PolygonLabelMap& map) {
  std::vector<std::uint64_t> ints;
  for (const auto& obj : map.objects) {
    ints.push_back(static_cast<std::uint64_t>(obj.class_id));
    ints.push_back(static_cast<std::uint64_t>(obj.instance_id));
    ints.push_back(obj.polygon.size() - 3);
    ints.push_back(static_cast<std::uint64_t>(obj.polygon[0].x));
    ints.push_back(static_cast<std::uint64_t>(obj.polygon[0].y));
    for (std::size_t i = 1; i < obj.polygon.size(); ++i) {
      ints.push_back(intcode::zigzag(obj.polygon[i].x - obj.polygon[i - 1].x));
      ints.push_back(intcode::zigzag(obj.polygon[i].y - obj.polygon[i - 1].y));
    }
  }
  return ints;
}

}  // namespace

std::vector<std::uint8_t> encode_label_map(const PolygonLabelMap& map, int width, int height) {
  map.validate(width, height);
  ByteWriter out;
  out.varint(map.objects.size());
  if (map.objects.empty()) return out.take();
  const auto ints = label_stream(map);
  const FrequencyTable table = intcode::bucket_table(ints);
  intcode::write_sparse_table(out, table);
  BitWriter bits;
  ArithmeticEncoder enc(bits);
  for (auto v : ints) intcode::encode(enc, v, table);
  enc.finish();
  out.raw(bits.bytes());
  return out.take();
}

PolygonLabelMap decode_label_map(std::span<const std::uint8_t> bytes, int width, int height) {
  ByteReader in(bytes, "label map");
  const std::uint64_t count = in.varint();
  PolygonLabelMap map;
  if (count == 0) {
    if (!in.at_end()) throw CorruptionError("label map: trailing data");
    return map;
  }
  const std::uint64_t max_objects = static_cast<std::uint64_t>(bytes.size()) * 8;
  if (count > max_objects) throw CorruptionError("label map: implausible object count");
  const FrequencyTable table = intcode::read_sparse_table(in, intcode::kMaxBucket);
  const auto payload = in.rest();
  BitReader bits(payload);
  ArithmeticDecoder dec(bits);
  auto next = [&](std::uint64_t limit) {
    const std::uint64_t v = intcode::decode(dec, table);
    if (v > limit) throw CorruptionError("label map: value out of range");
    return v;
  };
  const auto max_coord = static_cast<std::uint64_t>(std::max(width, height));
  for (std::uint64_t k = 0; k < count; ++k) {
    PolygonLabelMap::Object obj;
    obj.class_id = static_cast<int>(next(0x7fffffff));
    obj.instance_id = static_cast<int>(next(0x7fffffff));
    const std::uint64_t nverts = next(static_cast<std::uint64_t>(payload.size()) * 8) + 3;
    GridPoint p;
    p.x = static_cast<int>(next(static_cast<std::uint64_t>(width)));
    p.y = static_cast<int>(next(static_cast<std::uint64_t>(height)));
    obj.polygon.push_back(p);
    for (std::uint64_t i = 1; i < nverts; ++i) {
      p.x += static_cast<int>(intcode::unzigzag(next(2 * max_coord + 1)));
      p.y += static_cast<int>(intcode::unzigzag(next(2 * max_coord + 1)));
      if (p.x < 0 || p.y < 0 || p.x > width || p.y > height) throw CorruptionError("label map: vertex out of bounds");
      obj.polygon.push_back(p);
    }
    map.objects.push_back(std::move(obj));
  }
  dec.finish();
  if ((bits.position() + 7) / 8 != payload.size()) throw CorruptionError("label map: length mismatch");
  return map;
}

LabelGrids rasterize_label_map(const PolygonLabelMap& map, int width, int height) {
  LabelGrids grids;
  grids.width = width;
  grids.height = height;
  grids.classes.assign(static_cast<std::size_t>(width) * height, 0);
  grids.instances.assign(static_cast<std::size_t>(width) * height, 0);
  std::vector<double> crossings;
  for (const auto& obj : map.objects) {
    const auto& poly = obj.polygon;
    if (poly.size() < 3) continue;
    int ymin = height, ymax = 0;
    for (const auto& p : poly) {
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    ymin = std::max(ymin, 0);
    ymax = std::min(ymax, height);
    for (int y = ymin; y < ymax; ++y) {
      const double yc = y + 0.5;
      crossings.clear();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const GridPoint a = poly[i];
        const GridPoint b = poly[(i + 1) % poly.size()];
        if ((a.y <= yc) == (b.y <= yc)) continue;
        crossings.push_back(a.x + (yc - a.y) * (b.x - a.x) / static_cast<double>(b.y - a.y));
      }
      std::sort(crossings.begin(), crossings.end());
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        // Pixels whose center x + 0.5 lies inside [left, right).
        const int x0 = std::max(0, static_cast<int>(std::ceil(crossings[k] - 0.5)));
        const int x1 = std::min(width, static_cast<int>(std::ceil(crossings[k + 1] - 0.5)));
        for (int x = x0; x < x1; ++x) {
          grids.classes[static_cast<std::size_t>(y) * width + x] = obj.class_id;
          grids.instances[static_cast<std::size_t>(y) * width + x] = obj.instance_id;
        }
      }
    }
  }
  return grids;
}

}  // namespace gcpress
