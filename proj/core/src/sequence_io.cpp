#include "fusionpose/sequence_io.hpp"

#include "fusionpose/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fusionpose {
namespace {

static_assert(std::endian::native == std::endian::little, "sequence files are little-endian");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& file) : file_(file), out_(file, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + file.string() + " for writing");
  }
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + file_.string());
  }

 private:
  std::filesystem::path file_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& file) : file_(file), in_(file, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + file.string());
  }
  template <typename T>
  T get() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw IoError("truncated sequence file: " + file_.string());
  }
  void skip(std::size_t n) {
    in_.seekg(static_cast<std::streamoff>(n), std::ios::cur);
    if (!in_) throw IoError("truncated sequence file: " + file_.string());
  }
  const std::filesystem::path& path() const { return file_; }

 private:
  std::filesystem::path file_;
  std::ifstream in_;
};

void put_box2d(Writer& w, const Detection2D& d) {
  w.put(d.box.u_min);
  w.put(d.box.v_min);
  w.put(d.box.u_max);
  w.put(d.box.v_max);
  w.put(d.score);
}

void put_box3d(Writer& w, const Detection3D& d) {
  for (int k = 0; k < 3; ++k) w.put(d.box.center[k]);
  for (int k = 0; k < 3; ++k) w.put(d.box.size[k]);
  w.put(d.box.yaw);
}

}  // namespace

void write_sequence(const std::filesystem::path& file, const SequenceData& data) {
  Writer w(file);
  w.bytes(kSequenceMagic, sizeof(kSequenceMagic));
  w.put(static_cast<std::uint32_t>(data.frames.size()));
  w.put(static_cast<std::uint32_t>(data.person_count));
  w.put(static_cast<std::uint32_t>(data.height));
  w.put(static_cast<std::uint32_t>(data.width));
  w.put(data.frame_rate);
  const Calibration& c = data.calib;
  w.put(c.fx);
  w.put(c.fy);
  w.put(c.cx);
  w.put(c.cy);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) w.put(c.rotation(r, k));
  for (int k = 0; k < 3; ++k) w.put(c.translation[k]);

  for (const FrameRecord& f : data.frames) {
    if (f.labels.size() != static_cast<std::size_t>(f.points.rows())) {
      throw InvalidInput("write_sequence: one label per point required");
    }
    if (f.raster.height != data.height || f.raster.width != data.width || f.raster.channels != 3) {
      throw InvalidInput("write_sequence: raster size differs from header");
    }
    if (f.persons.size() != data.person_count) {
      throw InvalidInput("write_sequence: person count differs from header");
    }
    w.put(static_cast<std::uint64_t>(f.points.rows()));
    for (Eigen::Index i = 0; i < f.points.rows(); ++i) {
      w.put(f.points(i, 0));
      w.put(f.points(i, 1));
      w.put(f.points(i, 2));
      w.put(f.labels[static_cast<std::size_t>(i)]);
    }
    w.bytes(f.raster.data.data(), f.raster.data.size() * sizeof(float));
    for (const PersonRecord& p : f.persons) {
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        w.put(p.keypoints.joints(static_cast<Eigen::Index>(j), 0));
        w.put(p.keypoints.joints(static_cast<Eigen::Index>(j), 1));
      }
      for (std::size_t j = 0; j < kNumJoints; ++j) w.put(static_cast<std::uint8_t>(p.keypoints.visible[j]));
      w.put(static_cast<std::uint8_t>(p.ground_truth.present()));
      if (p.ground_truth.present()) {
        const Pose3D& gt = p.ground_truth.get();
        for (std::size_t j = 0; j < kNumJoints; ++j)
          for (int k = 0; k < 3; ++k) w.put(gt.joints(static_cast<Eigen::Index>(j), k));
      }
      w.put(static_cast<std::uint8_t>(p.det2d.has_value()));
      if (p.det2d) put_box2d(w, *p.det2d);
      w.put(static_cast<std::uint8_t>(p.det3d.has_value()));
      if (p.det3d) put_box3d(w, *p.det3d);
    }
  }
  w.finish();
}

SequenceData read_sequence(const std::filesystem::path& file, const ReadOptions& options) {
  Reader r(file);
  char magic[sizeof(kSequenceMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kSequenceMagic, sizeof(magic)) != 0) {
    throw IoError("not a sequence file: " + file.string());
  }
  SequenceData data;
  const auto frames = r.get<std::uint32_t>();
  data.person_count = r.get<std::uint32_t>();
  data.height = r.get<std::uint32_t>();
  data.width = r.get<std::uint32_t>();
  data.frame_rate = r.get<double>();
  Calibration& c = data.calib;
  c.fx = r.get<double>();
  c.fy = r.get<double>();
  c.cx = r.get<double>();
  c.cy = r.get<double>();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.rotation(i, k) = r.get<double>();
  for (int k = 0; k < 3; ++k) c.translation[k] = r.get<double>();

  data.frames.resize(frames);
  for (FrameRecord& f : data.frames) {
    const auto n = r.get<std::uint64_t>();
    f.points.resize(static_cast<Eigen::Index>(n), 3);
    f.labels.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      f.points(row, 0) = r.get<double>();
      f.points(row, 1) = r.get<double>();
      f.points(row, 2) = r.get<double>();
      f.labels[i] = r.get<std::uint16_t>();
    }
    f.raster = Image(data.height, data.width, 3);
    r.bytes(f.raster.data.data(), f.raster.data.size() * sizeof(float));
    f.persons.resize(data.person_count);
    for (PersonRecord& p : f.persons) {
      p.keypoints.joints.resize(kNumJoints, 2);
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        p.keypoints.joints(static_cast<Eigen::Index>(j), 0) = r.get<double>();
        p.keypoints.joints(static_cast<Eigen::Index>(j), 1) = r.get<double>();
      }
      p.keypoints.visible.resize(kNumJoints);
      for (std::size_t j = 0; j < kNumJoints; ++j) p.keypoints.visible[j] = r.get<std::uint8_t>() != 0;
      if (r.get<std::uint8_t>()) {
        if (options.load_ground_truth) {
          Pose3D gt;
          gt.joints.resize(kNumJoints, 3);
          for (std::size_t j = 0; j < kNumJoints; ++j)
            for (int k = 0; k < 3; ++k) gt.joints(static_cast<Eigen::Index>(j), k) = r.get<double>();
          p.ground_truth.set(std::move(gt));
        } else {
          r.skip(kNumJoints * 3 * sizeof(double));
        }
      }
      if (r.get<std::uint8_t>()) {
        Detection2D d;
        d.box.u_min = r.get<double>();
        d.box.v_min = r.get<double>();
        d.box.u_max = r.get<double>();
        d.box.v_max = r.get<double>();
        d.score = r.get<double>();
        p.det2d = d;
      }
      if (r.get<std::uint8_t>()) {
        Detection3D d;
        for (int k = 0; k < 3; ++k) d.box.center[k] = r.get<double>();
        for (int k = 0; k < 3; ++k) d.box.size[k] = r.get<double>();
        d.box.yaw = r.get<double>();
        p.det3d = d;
      }
    }
  }
  return data;
}

void write_manifest(const std::filesystem::path& file, const std::vector<std::string>& entries) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  for (const std::string& e : entries) out << e << '\n';
  if (!out) throw IoError("write failed: " + file.string());
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest " + file.string());
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::filesystem::path p(line);
    out.push_back(p.is_absolute() ? p : file.parent_path() / p);
  }
  return out;
}

}  // namespace fusionpose
