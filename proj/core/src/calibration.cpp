#include "fusionpose/calibration.hpp"

#include "fusionpose/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace fusionpose {

void Calibration::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidInput("calibration: focal lengths must be positive");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9)) throw InvalidInput("calibration: rotation is not orthonormal");
  if (!(std::abs(rotation.determinant() - 1.0) <= 1e-9)) {
    throw InvalidInput("calibration: rotation determinant must be +1");
  }
  if (!translation.allFinite() || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw InvalidInput("calibration: non-finite entries");
  }
}

Projection project(const Points3& world, const Calibration& calib) {
  Projection out;
  out.pixels.resize(world.rows(), 2);
  out.valid.assign(static_cast<std::size_t>(world.rows()), false);
  for (Eigen::Index i = 0; i < world.rows(); ++i) {
    const Eigen::Vector3d p = calib.to_camera(world.row(i).transpose());
    if (p.z() <= kMinDepth) {
      out.pixels.row(i) << calib.cx, calib.cy;
      continue;
    }
    out.pixels(i, 0) = calib.fx * p.x() / p.z() + calib.cx;
    out.pixels(i, 1) = calib.fy * p.y() / p.z() + calib.cy;
    out.valid[static_cast<std::size_t>(i)] = true;
  }
  return out;
}

Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const Calibration& calib) {
  const Eigen::Vector3d cam((pixel.x() - calib.cx) / calib.fx * depth,
                            (pixel.y() - calib.cy) / calib.fy * depth, depth);
  return calib.to_world(cam);
}

Calibration parse_calibration(const std::string& text) {
  std::map<std::string, double> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("calibration line " + std::to_string(lineno) + ": expected key = value");
    }
    std::istringstream ks(line.substr(0, eq));
    std::istringstream vs(line.substr(eq + 1));
    std::string key;
    double value = 0.0;
    ks >> key;
    if (!(vs >> value)) {
      throw InvalidInput("calibration line " + std::to_string(lineno) + ": bad number for '" + key + "'");
    }
    kv[key] = value;
  }
  auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InvalidInput("calibration: missing key '" + key + "'");
    return it->second;
  };
  Calibration c;
  c.fx = need("fx");
  c.fy = need("fy");
  c.cx = need("cx");
  c.cy = need("cy");
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) c.rotation(r, k) = need("r" + std::to_string(r) + std::to_string(k));
  }
  c.translation = {need("tx"), need("ty"), need("tz")};
  c.validate();
  return c;
}

std::string format_calibration(const Calibration& calib) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "fx = " << calib.fx << "\nfy = " << calib.fy << "\ncx = " << calib.cx << "\ncy = " << calib.cy << '\n';
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) os << 'r' << r << k << " = " << calib.rotation(r, k) << '\n';
  }
  os << "tx = " << calib.translation.x() << "\nty = " << calib.translation.y()
     << "\ntz = " << calib.translation.z() << '\n';
  return os.str();
}

Calibration load_calibration(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open calibration " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_calibration(ss.str());
}

void save_calibration(const std::filesystem::path& file, const Calibration& calib) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot write calibration " + file.string());
  os << format_calibration(calib);
}

Calibration forward_facing_calibration(double fx, double fy, double cx, double cy,
                                       const Eigen::Vector3d& translation) {
  Calibration c;
  c.fx = fx;
  c.fy = fy;
  c.cx = cx;
  c.cy = cy;
  c.rotation << 0, -1, 0,
                0, 0, -1,
                1, 0, 0;
  c.translation = translation;
  return c;
}

}  // namespace fusionpose
