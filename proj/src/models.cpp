#include "rdcert/models.hpp"

#include <cmath>
#include <string>

#include "rdcert/error.hpp"

namespace rdcert {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParams(std::string(name) + " must be positive and finite");
}

std::vector<double> unit(std::size_t n, std::size_t i, double s = 1.0) {
  std::vector<double> e(n, 0.0);
  e[i] = s;
  return e;
}

}  // namespace

void validate(const GoodwinParams& p) {
  require_positive(p.a1, "a1");
  require_positive(p.a2, "a2");
  require_positive(p.b1, "b1");
  require_positive(p.b2, "b2");
  require_positive(p.v1, "V1");
  require_positive(p.v3, "V3");
  require_positive(p.k1, "K1");
  require_positive(p.k3, "K3");
}

void validate(const GoldbeterParams& p) {
  if (p.n < 1) throw InvalidParams("Hill coefficient n must be an integer >= 1");
  require_positive(p.vs, "vs");
  require_positive(p.ki, "KI");
  require_positive(p.ks, "ks");
  require_positive(p.k1, "k1");
  require_positive(p.k2, "k2");
  if (p.v.size() != 4 || p.k.size() != 4) throw InvalidParams("V and K need four entries each");
  for (int i = 0; i < 4; ++i) {
    require_positive(p.v[i], "V_i");
    require_positive(p.k[i], "K_i");
  }
  require_positive(p.vm, "vm");
  require_positive(p.vd, "vd");
  require_positive(p.kd, "kd");
  require_positive(p.km, "km");
}

void validate(const FhnParams& p) {
  require_positive(p.b, "b");
  require_positive(p.c, "c");
  if (!std::isfinite(p.a)) throw InvalidParams("a must be finite");
}

Model goodwin_model(const GoodwinParams& p) {
  validate(p);
  Model m;
  m.name = "goodwin";
  m.n = 3;
  m.domain = StateDomain::kNonnegativeOrthant;
  m.f = [p](std::span<const double> x) {
    return std::vector<double>{-p.a1 * x[0] + p.v1 / (p.k1 + x[2]), p.b1 * x[0] - p.a2 * x[1],
                               p.b2 * x[1] - p.v3 * x[2] / (p.k3 + x[2])};
  };
  m.jac = [p](std::span<const double> x) {
    const double b3 = p.v1 / ((p.k1 + x[2]) * (p.k1 + x[2]));
    const double a3 = p.v3 * p.k3 / ((p.k3 + x[2]) * (p.k3 + x[2]));
    return Mat::from_rows({{-p.a1, 0.0, -b3}, {p.b1, -p.a2, 0.0}, {0.0, p.b2, -a3}});
  };
  return m;
}

Envelope goodwin_envelope(const GoodwinParams& p) {
  validate(p);
  Envelope env;
  env.a0 = Mat::from_rows({{-p.a1, 0.0, 0.0}, {p.b1, -p.a2, 0.0}, {0.0, p.b2, 0.0}});
  env.box_terms.push_back(make_box_term({-p.v1 / (p.k1 * p.k1), 0.0, 0.0}, unit(3, 2), "A1"));
  env.box_terms.push_back(make_box_term(unit(3, 2, -p.v3 / p.k3), unit(3, 2), "A2"));
  return env;
}

Model goldbeter_model(const GoldbeterParams& p) {
  validate(p);
  Model m;
  m.name = "goldbeter";
  m.n = 5;
  m.domain = StateDomain::kNonnegativeOrthant;
  m.f = [p](std::span<const double> x) {
    const double mm = x[0], p0 = x[1], p1 = x[2], p2 = x[3], pn = x[4];
    const double kin = std::pow(p.ki, p.n);
    const double r1 = p.v[0] * p0 / (p.k[0] + p0);
    const double r2 = p.v[1] * p1 / (p.k[1] + p1);
    const double r3 = p.v[2] * p1 / (p.k[2] + p1);
    const double r4 = p.v[3] * p2 / (p.k[3] + p2);
    return std::vector<double>{
        p.vs * kin / (kin + std::pow(pn, p.n)) - p.vm * mm / (p.km + mm),
        p.ks * mm - r1 + r2,
        r1 - r2 - r3 + r4,
        r3 - r4 - p.k1 * p2 + p.k2 * pn - p.vd * p2 / (p.kd + p2),
        p.k1 * p2 - p.k2 * pn,
    };
  };
  m.jac = [p](std::span<const double> x) {
    auto mm_slope = [](double v, double k, double s) { return v * k / ((k + s) * (k + s)); };
    const double f1 = mm_slope(p.v[0], p.k[0], x[1]);
    const double f2 = mm_slope(p.v[1], p.k[1], x[2]);
    const double f3 = mm_slope(p.v[2], p.k[2], x[2]);
    const double f4 = mm_slope(p.v[3], p.k[3], x[3]);
    const double kin = std::pow(p.ki, p.n);
    const double den = kin + std::pow(x[4], p.n);
    const double f5 = p.vs * kin * p.n * std::pow(x[4], p.n - 1) / (den * den);
    const double f6 = mm_slope(p.vm, p.km, x[0]);
    const double f7 = mm_slope(p.vd, p.kd, x[3]);
    Mat j(5, 5);
    j(0, 0) = -f6;
    j(0, 4) = -f5;
    j(1, 0) = p.ks;
    j(1, 1) = -f1;
    j(1, 2) = f2;
    j(2, 1) = f1;
    j(2, 2) = -f2 - f3;
    j(2, 3) = f4;
    j(3, 2) = f3;
    j(3, 3) = -f4 - p.k1 - f7;
    j(3, 4) = p.k2;
    j(4, 3) = p.k1;
    j(4, 4) = -p.k2;
    return j;
  };
  return m;
}

double goldbeter_phi5_bound(const GoldbeterParams& p) {
  validate(p);
  const double n = p.n;
  // Maximum of n u^(n-1) / (1 + u^n)^2 sits at u^n = (n-1)/(n+1).
  return p.vs / p.ki * (n + 1.0) * (n + 1.0) / (4.0 * n) * std::pow((n - 1.0) / (n + 1.0), (n - 1.0) / n);
}

Envelope goldbeter_envelope(const GoldbeterParams& p, bool overparameterize) {
  validate(p);
  const std::size_t n = 5;
  Envelope env;
  env.a0 = Mat(n, n);
  env.a0(1, 0) = p.ks;
  env.a0(3, 3) = -p.k1;
  env.a0(3, 4) = p.k2;
  env.a0(4, 3) = p.k1;
  env.a0(4, 4) = -p.k2;

  const double f1 = p.v[0] / p.k[0], f2 = p.v[1] / p.k[1], f3 = p.v[2] / p.k[2], f4 = p.v[3] / p.k[3];
  // Each phosphorylation slope phi enters column `col` with -phi in row `from`
  // and +phi in row `to`.
  struct Flux {
    double bound;
    std::size_t col, from, to;
    const char* name;
  };
  const Flux fluxes[] = {{f1, 1, 1, 2, "A1"}, {f2, 2, 2, 1, "A2"}, {f3, 2, 2, 3, "A3"}, {f4, 3, 3, 2, "A4"}};
  if (!overparameterize) {
    for (const auto& fl : fluxes) {
      std::vector<double> b(n, 0.0);
      b[fl.from] = -fl.bound;
      b[fl.to] = fl.bound;
      env.box_terms.push_back(make_box_term(std::move(b), unit(n, fl.col), fl.name));
    }
  } else {
    for (const auto& fl : fluxes) {
      const std::string nm = fl.name;
      env.box_terms.push_back(make_box_term(unit(n, fl.to, fl.bound), unit(n, fl.col), nm + "+"));
      env.box_terms.push_back(make_box_term(unit(n, fl.from, -fl.bound), unit(n, fl.col), nm + "-"));
    }
  }
  env.box_terms.push_back(make_box_term(unit(n, 0, -goldbeter_phi5_bound(p)), unit(n, 4), "A5"));
  env.box_terms.push_back(make_box_term(unit(n, 0, -p.vm / p.km), unit(n, 0), "A6"));
  env.box_terms.push_back(make_box_term(unit(n, 3, -p.vd / p.kd), unit(n, 3), "A7"));
  return env;
}

Model fhn_model(const FhnParams& p) {
  validate(p);
  Model m;
  m.name = "fhn";
  m.n = 2;
  m.domain = StateDomain::kEverywhere;
  m.f = [p](std::span<const double> x) {
    return std::vector<double>{p.c * (x[0] - x[0] * x[0] * x[0] / 3.0 + x[1]), (p.a - x[0] - p.b * x[1]) / p.c};
  };
  m.jac = [p](std::span<const double> x) {
    return Mat::from_rows({{p.c * (1.0 - x[0] * x[0]), p.c}, {-1.0 / p.c, -p.b / p.c}});
  };
  return m;
}

Envelope fhn_envelope(const FhnParams& p) {
  validate(p);
  Envelope env;
  env.a0 = Mat::from_rows({{p.c, p.c}, {-1.0 / p.c, -p.b / p.c}});
  env.conv_vertices.push_back(env.a0);
  env.cone_gens.push_back(Mat::outer(unit(2, 0, -1.0), unit(2, 0)));
  return env;
}

namespace {

void check_lure_dims(const Mat& a, const std::vector<double>& b, const std::vector<double>& c) {
  if (!a.square() || a.rows() == 0 || b.size() != a.rows() || c.size() != a.rows())
    throw DimensionMismatch("Lur'e system needs square A and B, C of matching length");
}

}  // namespace

Model lure_model(const Mat& a, const std::vector<double>& b, const std::vector<double>& c,
                 std::function<double(double)> phi, std::function<double(double)> dphi) {
  check_lure_dims(a, b, c);
  Model m;
  m.name = "lure";
  m.n = a.rows();
  m.domain = StateDomain::kEverywhere;
  auto cdot = [c](std::span<const double> x) {
    double y = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) y += c[i] * x[i];
    return y;
  };
  m.f = [a, b, cdot, phi](std::span<const double> x) {
    auto out = a * x;
    const double u = phi(cdot(x));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i] * u;
    return out;
  };
  m.jac = [a, b, c, cdot, dphi](std::span<const double> x) {
    Mat j = a;
    j += dphi(cdot(x)) * Mat::outer(b, c);
    return j;
  };
  return m;
}

Envelope lure_envelope(const Mat& a, const std::vector<double>& b, const std::vector<double>& c,
                       double gamma) {
  check_lure_dims(a, b, c);
  if (!std::isfinite(gamma)) throw InvalidParams("gamma must be finite");
  const Mat bc = Mat::outer(b, c);
  Envelope env;
  env.a0 = a;
  env.a0 += gamma * bc;
  env.conv_vertices.push_back(env.a0);
  env.cone_gens.push_back(-bc);
  return env;
}

Model linear_model(const Mat& a) {
  if (!a.square() || a.rows() == 0) throw DimensionMismatch("linear model needs a square matrix");
  Model m;
  m.name = "linear";
  m.n = a.rows();
  m.domain = StateDomain::kEverywhere;
  m.f = [a](std::span<const double> x) { return a * x; };
  m.jac = [a](std::span<const double>) { return a; };
  return m;
}

}  // namespace rdcert
