#include "freemap/io.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace freemap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T from_le(const char* bytes) {
  T v;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(&v, bytes, sizeof(T));
  } else {
    char tmp[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) tmp[i] = bytes[sizeof(T) - 1 - i];
    std::memcpy(&v, tmp, sizeof(T));
  }
  return v;
}

template <typename T>
void to_le(T v, std::string& out) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  if constexpr (std::endian::native != std::endian::little) std::reverse(tmp, tmp + sizeof(T));
  out.append(tmp, sizeof(T));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::vector<double> parse_reals(const std::string& line, const std::string& where) {
  std::istringstream ss(line);
  std::vector<double> v;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(x)) throw FormatError(where + ": not a finite number '" + tok + "'");
    v.push_back(x);
  }
  return v;
}

Pose pose_from_row_major(const std::vector<double>& v, const std::string& where) {
  Eigen::Matrix3d r;
  Eigen::Vector3d t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = v[static_cast<std::size_t>(i * 4 + j)];
    t(i) = v[static_cast<std::size_t>(i * 4 + 3)];
  }
  const double err = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (err > 1e-3 || r.determinant() <= 0.0) throw FormatError(where + ": rotation part is not a proper rotation");
  Pose pose = Pose::Identity();
  if (err > 1e-10) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
  }
  pose.linear() = r;
  pose.translation() = t;
  return pose;
}

std::string frame_name(std::size_t i, const char* ext) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << i << ext;
  return ss.str();
}

}  // namespace

ScanRecord read_scan_bin(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError(path + ": truncated record at byte offset " + std::to_string(bytes.size() - bytes.size() % 16) +
                      " (file size " + std::to_string(bytes.size()) + " is not a multiple of 16)");
  }
  ScanRecord rec;
  const std::size_t n = bytes.size() / 16;
  rec.points.reserve(n);
  rec.intensity.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* p = bytes.data() + i * 16;
    rec.points.emplace_back(from_le<float>(p), from_le<float>(p + 4), from_le<float>(p + 8));
    rec.intensity.push_back(from_le<float>(p + 12));
  }
  return rec;
}

void write_scan_bin(const std::string& path, const std::vector<Vec3>& points, const std::vector<float>& intensity) {
  if (!intensity.empty() && intensity.size() != points.size()) {
    throw std::invalid_argument("intensity count must match point count");
  }
  std::string out;
  out.reserve(points.size() * 16);
  for (std::size_t i = 0; i < points.size(); ++i) {
    to_le(static_cast<float>(points[i].x()), out);
    to_le(static_cast<float>(points[i].y()), out);
    to_le(static_cast<float>(points[i].z()), out);
    to_le(intensity.empty() ? 0.0f : intensity[i], out);
  }
  write_file(path, out);
}

Pose read_calib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("Tr:", 0) != 0) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto v = parse_reals(line.substr(3), where);
    if (v.size() != 12) throw FormatError(where + ": expected 12 values after 'Tr:', got " + std::to_string(v.size()));
    return pose_from_row_major(v, where);
  }
  throw FormatError(path + ": no 'Tr:' line");
}

std::vector<Pose> read_poses(const std::string& path, const std::optional<Pose>& tr) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto v = parse_reals(line, where);
    if (v.size() != 12) throw FormatError(where + ": expected 12 values, got " + std::to_string(v.size()));
    Pose p = pose_from_row_major(v, where);
    if (tr) p = tr->inverse() * p * *tr;
    poses.push_back(p);
  }
  return poses;
}

void write_poses(const std::string& path, const std::vector<Pose>& poses) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  for (const Pose& p : poses) {
    const Eigen::Matrix4d m = p.matrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) ss << m(i, j) << ((i == 2 && j == 3) ? '\n' : ' ');
  }
  write_file(path, ss.str());
}

const std::set<std::uint32_t>& default_dynamic_classes() {
  static const std::set<std::uint32_t> classes{252, 253, 254, 255, 256, 257, 258, 259};
  return classes;
}

std::vector<std::uint32_t> read_label_words(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() % 4 != 0) {
    throw FormatError(path + ": truncated label at byte offset " + std::to_string(bytes.size() - bytes.size() % 4));
  }
  std::vector<std::uint32_t> words(bytes.size() / 4);
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = from_le<std::uint32_t>(bytes.data() + i * 4);
  return words;
}

void write_label_words(const std::string& path, const std::vector<std::uint32_t>& words) {
  std::string out;
  out.reserve(words.size() * 4);
  for (std::uint32_t w : words) to_le(w, out);
  write_file(path, out);
}

std::vector<std::uint8_t> read_labels(const std::string& path, std::size_t expected_count,
                                      const std::set<std::uint32_t>& dynamic_classes) {
  const auto words = read_label_words(path);
  if (words.size() != expected_count) {
    throw FormatError(path + ": " + std::to_string(words.size()) + " labels for " + std::to_string(expected_count) +
                      " points");
  }
  std::vector<std::uint8_t> flags(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) flags[i] = dynamic_classes.contains(words[i] & 0xFFFFu) ? 1 : 0;
  return flags;
}

Dataset::Dataset(const std::string& dir) : dir_(dir) {
  if (!fs::is_directory(dir)) throw FormatError(dir + ": not a directory");
  std::optional<Pose> tr;
  const fs::path calib = fs::path(dir) / "calib.txt";
  if (fs::exists(calib)) tr = read_calib(calib.string());
  const fs::path poses = fs::path(dir) / "poses.txt";
  if (!fs::exists(poses)) throw FormatError(dir + ": missing poses.txt");
  poses_ = read_poses(poses.string(), tr);
  for (std::size_t i = 0; i < poses_.size(); ++i) {
    if (!fs::exists(scan_path(i))) throw FormatError(scan_path(i) + ": missing scan for pose line " +
                                                     std::to_string(i + 1));
  }
  has_labels_ = fs::is_directory(fs::path(dir) / "labels");
  const fs::path config = fs::path(dir) / "config.json";
  if (fs::exists(config)) {
    std::ifstream in(config);
    try {
      config_ = json::parse(in);
    } catch (const json::parse_error& e) {
      throw FormatError(config.string() + ": " + e.what());
    }
  }
}

std::string Dataset::scan_path(std::size_t i) const {
  return (fs::path(dir_) / "velodyne" / frame_name(i, ".bin")).string();
}

std::string Dataset::label_path(std::size_t i) const {
  return (fs::path(dir_) / "labels" / frame_name(i, ".label")).string();
}

DatasetFrame Dataset::frame(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("frame index " + std::to_string(i) + " out of range");
  DatasetFrame f;
  f.points = read_scan_bin(scan_path(i)).points;
  f.pose = poses_[i];
  if (has_labels_) f.dynamic = read_labels(label_path(i), f.points.size(), dynamic_classes);
  return f;
}

void write_dataset_frame(const std::string& dir, std::size_t index, const DatasetFrame& frame, bool with_labels) {
  fs::create_directories(fs::path(dir) / "velodyne");
  write_scan_bin((fs::path(dir) / "velodyne" / frame_name(index, ".bin")).string(), frame.points);
  if (with_labels) {
    if (frame.dynamic.size() != frame.points.size()) throw std::invalid_argument("flag count must match point count");
    fs::create_directories(fs::path(dir) / "labels");
    std::vector<std::uint32_t> words(frame.dynamic.size());
    for (std::size_t i = 0; i < words.size(); ++i) words[i] = frame.dynamic[i] ? 252u : 40u;
    write_label_words((fs::path(dir) / "labels" / frame_name(index, ".label")).string(), words);
  }
}

void write_ply(const std::string& path, const std::vector<Vec3>& points, const std::vector<std::string>& comments) {
  std::string out = "ply\nformat binary_little_endian 1.0\n";
  for (const std::string& c : comments) {
    if (c.find('\n') != std::string::npos) throw std::invalid_argument("PLY comments must be single lines");
    out += "comment " + c + "\n";
  }
  out += "element vertex " + std::to_string(points.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\nend_header\n";
  out.reserve(out.size() + points.size() * 24);
  for (const Vec3& p : points) {
    to_le(p.x(), out);
    to_le(p.y(), out);
    to_le(p.z(), out);
  }
  write_file(path, out);
}

PlyData read_ply(const std::string& path) {
  const std::string bytes = read_file(path);
  const std::string marker = "end_header\n";
  const auto end = bytes.find(marker);
  if (bytes.rfind("ply\n", 0) != 0 || end == std::string::npos) throw FormatError(path + ": not a PLY file");
  std::istringstream header(bytes.substr(0, end));
  PlyData data;
  std::string line;
  std::size_t count = 0;
  bool binary_le = false;
  std::vector<std::string> props;
  int line_no = 0;
  while (std::getline(header, line)) {
    ++line_no;
    if (line.rfind("comment ", 0) == 0) {
      data.comments.push_back(line.substr(8));
    } else if (line.rfind("format ", 0) == 0) {
      binary_le = line == "format binary_little_endian 1.0";
    } else if (line.rfind("element vertex ", 0) == 0) {
      count = std::stoull(line.substr(15));
    } else if (line.rfind("property ", 0) == 0) {
      props.push_back(line.substr(9));
    }
  }
  if (!binary_le) throw FormatError(path + ": only binary_little_endian PLY is supported");
  if (props != std::vector<std::string>{"double x", "double y", "double z"}) {
    throw FormatError(path + ": expected double x, y, z vertex properties");
  }
  const std::size_t body = end + marker.size();
  if (bytes.size() - body != count * 24) {
    throw FormatError(path + ": vertex data ends at byte offset " + std::to_string(bytes.size()) + ", expected " +
                      std::to_string(body + count * 24));
  }
  data.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const char* p = bytes.data() + body + i * 24;
    data.points.emplace_back(from_le<double>(p), from_le<double>(p + 8), from_le<double>(p + 16));
  }
  return data;
}

void write_map(const std::string& path, const StaticMapSnapshot& snapshot) {
  write_ply(path, snapshot.points,
            {"generator freemap", "timestep " + std::to_string(snapshot.timestep), "config " + snapshot.config.dump()});
}

nlohmann::json metrics_to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["pr"] = opt(r.pr);
  j["rr"] = opt(r.rr);
  j["f1"] = opt(r.f1);
  j["preserved_static_voxels"] = r.preserved_static;
  j["static_voxels"] = r.static_total;
  j["kept_dynamic_voxels"] = r.kept_dynamic;
  j["dynamic_voxels"] = r.dynamic_total;
  j["predicted_voxels"] = r.predicted_voxels;
  j["voxel_size"] = r.voxel_size;
  j["max_range"] = opt(r.max_range);
  return j;
}

void write_metrics(const std::string& path, const MetricsReport& report, const nlohmann::json& config,
                   const nlohmann::json& extra) {
  json doc = extra;
  doc["metrics"] = metrics_to_json(report);
  doc["config"] = config;
  write_json(path, doc);
}

void write_json(const std::string& path, const nlohmann::json& doc) { write_file(path, doc.dump(2) + "\n"); }

}  // namespace freemap
