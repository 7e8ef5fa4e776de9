#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace oracle {

Mat3 axis_angle(const Vec3& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  const double x = axis.x(), y = axis.y(), z = axis.z();
  Mat3 r;
  r << t * x * x + c, t * x * y - s * z, t * x * z + s * y,
       t * x * y + s * z, t * y * y + c, t * y * z - s * x,
       t * x * z - s * y, t * y * z + s * x, t * z * z + c;
  return r;
}

Mat3 rotvec(const Vec3& v) {
  const double angle = v.norm();
  if (angle == 0.0) {
    return Mat3::Identity();
  }
  return axis_angle(v / angle, angle);
}

Mat4 homogeneous(const Mat3& r, const Vec3& p) {
  Mat4 t = Mat4::Identity();
  t.block<3, 3>(0, 0) = r;
  t.block<3, 1>(0, 3) = p;
  return t;
}

Mat4 translation(const Vec3& p) { return homogeneous(Mat3::Identity(), p); }

std::filesystem::path default_chain_path() {
  return std::filesystem::path(RCMTELEOP_CONFIG_DIR) / "default_chain.json";
}

OracleChain load_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("oracle: cannot open " + path.string());
  }
  const nlohmann::json doc = nlohmann::json::parse(in);
  auto v3 = [](const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return Vec3(0, 0, 0);
    const auto& a = j.at(key);
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  };
  OracleChain chain;
  for (const auto& j : doc.at("joints")) {
    OracleJoint joint;
    joint.prismatic = j.value("kind", std::string("revolute")) == "prismatic";
    joint.axis = v3(j, "axis").normalized();
    joint.translation = v3(j, "translation");
    joint.rotation = v3(j, "rotation");
    chain.joints.push_back(joint);
  }
  chain.end_effector_index = doc.at("end_effector_index").get<int>();
  chain.instrument_index = doc.at("instrument_index").get<int>();
  chain.gripper_index = doc.at("gripper_index").get<int>();
  const auto& home = doc.at("home");
  chain.home.resize(static_cast<Eigen::Index>(home.size()));
  for (std::size_t i = 0; i < home.size(); ++i) {
    chain.home[static_cast<Eigen::Index>(i)] = home[i].get<double>();
  }
  return chain;
}

std::vector<Mat4> fk(const OracleChain& chain, const VecX& q) {
  std::vector<Mat4> frames;
  Mat4 t = Mat4::Identity();
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    const OracleJoint& j = chain.joints[i];
    const Mat4 fixed = homogeneous(rotvec(j.rotation), j.translation);
    Mat4 motion = Mat4::Identity();
    const double qi = q[static_cast<Eigen::Index>(i)];
    if (static_cast<int>(i) + 1 != chain.gripper_index) {
      motion = j.prismatic ? translation(j.axis * qi) : homogeneous(axis_angle(j.axis, qi), Vec3::Zero());
    }
    t = t * fixed * motion;
    frames.push_back(t);
  }
  return frames;
}

Eigen::Vector4d quat_from_matrix(const Mat3& r) {
  const double tr = r.trace();
  double w, x, y, z;
  if (tr > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    w = 0.25 * s;
    x = (r(2, 1) - r(1, 2)) / s;
    y = (r(0, 2) - r(2, 0)) / s;
    z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    w = (r(2, 1) - r(1, 2)) / s;
    x = 0.25 * s;
    y = (r(0, 1) + r(1, 0)) / s;
    z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    w = (r(0, 2) - r(2, 0)) / s;
    x = (r(0, 1) + r(1, 0)) / s;
    y = 0.25 * s;
    z = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    w = (r(1, 0) - r(0, 1)) / s;
    x = (r(0, 2) + r(2, 0)) / s;
    y = (r(1, 2) + r(2, 1)) / s;
    z = 0.25 * s;
  }
  Eigen::Vector4d out(w, x, y, z);
  out /= out.norm();
  if (out[0] < 0.0) {
    out = -out;
  }
  return out;
}

Vec3 rotation_log(const Mat3& r) {
  const Eigen::Vector4d quat = quat_from_matrix(r);
  const Vec3 v = quat.tail<3>();
  const double vn = v.norm();
  if (vn < 1e-300) {
    return Vec3::Zero();
  }
  const double angle = 2.0 * std::atan2(vn, quat[0]);
  return v / vn * angle;
}

Vec3 quat_log_error(const Mat3& r_d, const Mat3& r_c) { return rotation_log(r_d * r_c.transpose()); }

double rotation_angle(const Mat3& r) { return rotation_log(r).norm(); }

MatX fd_jacobian(const PoseFn& pose, const VecX& q, double step) {
  MatX jac(6, q.size());
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    VecX qp = q, qm = q;
    qp[k] += step;
    qm[k] -= step;
    const Mat4 tp = pose(qp);
    const Mat4 tm = pose(qm);
    jac.block<3, 1>(0, k) = (tp.block<3, 1>(0, 3) - tm.block<3, 1>(0, 3)) / (2.0 * step);
    const Mat3 rel = tp.block<3, 3>(0, 0) * tm.block<3, 3>(0, 0).transpose();
    jac.block<3, 1>(3, k) = rotation_log(rel) / (2.0 * step);
  }
  return jac;
}

MatX fd_jacobian(const OracleChain& chain, const VecX& q, int frame, double step) {
  return fd_jacobian([&](const VecX& x) { return fk(chain, x)[static_cast<std::size_t>(frame - 1)]; },
                     q, step);
}

MatX fd_point_jacobian(const PointFn& f, const VecX& x, double step) {
  MatX jac(3, x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    VecX xp = x, xm = x;
    xp[k] += step;
    xm[k] -= step;
    jac.col(k) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return jac;
}

Vec3 closest_point_on_segment(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 == 0.0) {
    return a;
  }
  double s = (p - a).dot(ab) / len2;
  s = std::max(0.0, std::min(1.0, s));
  return a + ab * s;
}

double distance_to_line(const Vec3& a, const Vec3& b, const Vec3& p) {
  // |(p - a) x (b - a)| / |b - a|
  return (p - a).cross(b - a).norm() / (b - a).norm();
}

OracleReport mp_identities(const MatX& m, const MatX& mp, double tol, const std::string& case_id) {
  OracleReport rep;
  rep.case_id = case_id;
  rep.tolerance = tol;
  const MatX mmp = m * mp;
  const MatX mpm = mp * m;
  const double e1 = (mmp * m - m).cwiseAbs().maxCoeff();
  const double e2 = (mpm * mp - mp).cwiseAbs().maxCoeff();
  const double e3 = (mmp.transpose() - mmp).cwiseAbs().maxCoeff();
  const double e4 = (mpm.transpose() - mpm).cwiseAbs().maxCoeff();
  rep.max_abs_error = std::max({e1, e2, e3, e4});
  rep.max_rel_error = rep.max_abs_error;
  rep.pass = rep.max_abs_error < tol;
  return rep;
}

OracleReport compare(const MatX& actual, const MatX& expected, double tol, const std::string& case_id) {
  OracleReport rep;
  rep.case_id = case_id;
  rep.tolerance = tol;
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    rep.max_abs_error = rep.max_rel_error = std::numeric_limits<double>::infinity();
    return rep;
  }
  const MatX diff = (actual - expected).cwiseAbs();
  rep.max_abs_error = diff.size() ? diff.maxCoeff() : 0.0;
  const MatX rel = diff.array() / (1.0 + expected.cwiseAbs().array());
  rep.max_rel_error = rel.size() ? rel.maxCoeff() : 0.0;
  rep.pass = rep.max_rel_error < tol;
  return rep;
}

}  // namespace oracle
