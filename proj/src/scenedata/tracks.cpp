#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "pairpred/errors.hpp"
#include "pairpred/scenedata.hpp"

namespace pairpred::scenedata {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* column) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(line, std::string("bad value '") + std::string(field) + "' in column " + column);
  }
  return value;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* class_name(AgentClass c) {
  switch (c) {
    case AgentClass::vehicle:
      return "vehicle";
    case AgentClass::pedestrian:
      return "pedestrian";
    default:
      return "";
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<Track> parse_tracks(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++line_no;
  const auto header = split(line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);
  for (const char* required : {"track_id", "frame", "x", "y"}) {
    if (!col.contains(required)) throw ParseError(1, std::string("header lacks column ") + required);
  }
  const auto column = [&](const char* name) -> std::optional<std::size_t> {
    auto it = col.find(name);
    return it == col.end() ? std::nullopt : std::optional(it->second);
  };
  const auto c_heading = column("heading");
  const auto c_speed = column("speed");
  const auto c_class = column("class");

  std::map<std::int64_t, Track> by_id;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    }
    TrackPoint p;
    p.track_id = parse_number<std::int64_t>(f[col["track_id"]], line_no, "track_id");
    p.frame = parse_number<std::int64_t>(f[col["frame"]], line_no, "frame");
    p.x = parse_number<double>(f[col["x"]], line_no, "x");
    p.y = parse_number<double>(f[col["y"]], line_no, "y");
    if (c_heading) p.heading = parse_number<double>(f[*c_heading], line_no, "heading");
    if (c_speed) p.speed = parse_number<double>(f[*c_speed], line_no, "speed");
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading) || !std::isfinite(p.speed)) {
      throw ParseError(line_no, "non-finite value");
    }
    if (p.speed < 0.0) throw ParseError(line_no, "negative speed");
    auto& track = by_id[p.track_id];
    track.id = p.track_id;
    if (c_class && track.points.empty()) {
      const auto cls = f[*c_class];
      track.cls = cls.empty() ? AgentClass::unknown
                  : cls == "pedestrian" ? AgentClass::pedestrian
                                        : AgentClass::vehicle;
    }
    track.points.push_back(p);
  }

  std::vector<Track> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, track] : by_id) {
    std::stable_sort(track.points.begin(), track.points.end(),
                     [](const TrackPoint& a, const TrackPoint& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < track.points.size(); ++i) {
      if (track.points[i].frame != track.points[i - 1].frame + 1) {
        throw ValidationError("track " + std::to_string(id) + ": frame " + std::to_string(track.points[i - 1].frame) +
                              " is followed by " + std::to_string(track.points[i].frame));
      }
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

std::vector<Track> load_tracks(const std::filesystem::path& csv_path) {
  auto in = open_input(csv_path);
  return parse_tracks(in);
}

void write_tracks(const std::filesystem::path& csv_path, const std::vector<Track>& tracks) {
  const bool with_class =
      std::any_of(tracks.begin(), tracks.end(), [](const Track& t) { return t.cls != AgentClass::unknown; });
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path.string());
  out << "track_id,frame,x,y,heading,speed" << (with_class ? ",class" : "") << '\n';
  for (const auto& t : tracks) {
    for (const auto& p : t.points) {
      out << p.track_id << ',' << p.frame << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
          << format_double(p.heading) << ',' << format_double(p.speed);
      if (with_class) out << ',' << class_name(t.cls);
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + csv_path.string());
}

std::vector<Track> resample_tracks(const std::vector<Track>& tracks, int factor) {
  if (factor < 1) throw ValidationError("resample factor must be >= 1");
  std::vector<Track> out;
  for (const auto& t : tracks) {
    Track r{t.id, t.cls, {}};
    for (const auto& p : t.points) {
      if (p.frame % factor != 0) continue;
      TrackPoint q = p;
      q.frame = p.frame / factor;
      r.points.push_back(q);
    }
    if (!r.points.empty()) out.push_back(std::move(r));
  }
  return out;
}

std::vector<InteractionLabel> load_labels(const std::filesystem::path& csv_path) {
  auto in = open_input(csv_path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != "frame,agent_a,agent_b,label") {
    throw ParseError(1, "expected header frame,agent_a,agent_b,label");
  }
  std::vector<InteractionLabel> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (f.size() != 4) throw ParseError(line_no, "expected 4 fields");
    InteractionLabel l;
    l.frame = parse_number<std::int64_t>(f[0], line_no, "frame");
    l.agent_a = parse_number<std::int64_t>(f[1], line_no, "agent_a");
    l.agent_b = parse_number<std::int64_t>(f[2], line_no, "agent_b");
    l.label = parse_number<int>(f[3], line_no, "label");
    if (l.label != 0 && l.label != 1) throw ParseError(line_no, "label must be 0 or 1");
    out.push_back(l);
  }
  return out;
}

void write_labels(const std::filesystem::path& csv_path, const std::vector<InteractionLabel>& labels) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path.string());
  out << "frame,agent_a,agent_b,label\n";
  for (const auto& l : labels) out << l.frame << ',' << l.agent_a << ',' << l.agent_b << ',' << l.label << '\n';
  if (!out) throw IoError("write failed: " + csv_path.string());
}

}  // namespace pairpred::scenedata
