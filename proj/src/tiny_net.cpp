#include "osmm/tiny_net.hpp"

#include <array>
#include <cmath>
#include <random>

namespace osmm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ConvSlot {
  Index w = 0, b = 0, film = -1;
  int cin = 0, cout = 0, stride = 1;
};

struct NetLayout {
  Index tmpl = 0, alpha = 0, beta = 0, w_embed = 0, b_embed = 0;
  std::array<ConvSlot, 5> conv;
  Index gain_w = 0, gain_b = 0;
  Index total = 0;
};

NetLayout make_layout(const NetArchitecture& a) {
  NetLayout l;
  Index at = 0;
  auto take = [&](Index n) {
    const Index start = at;
    at += n;
    return start;
  };
  const int c = a.channels, e = a.embed;
  l.tmpl = take(Index(a.template_rows()) * a.template_cols());
  l.alpha = take(1);
  l.beta = take(1);
  l.w_embed = take(e);
  l.b_embed = take(e);
  const std::array<std::array<int, 3>, 5> specs{{{2, c, 1}, {c, 2 * c, 2}, {2 * c, 2 * c, 1}, {3 * c, c, 1}, {c, 1, 1}}};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto& s = l.conv[i];
    s.cin = specs[i][0];
    s.cout = specs[i][1];
    s.stride = specs[i][2];
    s.w = take(Index(s.cout) * s.cin * 9);
    s.b = take(s.cout);
    if (i < 4) s.film = take(Index(s.cout) * e);
  }
  l.gain_w = take(e);
  l.gain_b = take(1);
  l.total = at;
  return l;
}

int conv_out(int n, int stride) { return (n - 1) / stride + 1; }

// 3x3, zero padding 1. Row c*9 + ky*3 + kx, column oy*wo + ox.
MatrixXd im2col(const MatrixXd& in, int h, int w, int stride) {
  const int ho = conv_out(h, stride), wo = conv_out(w, stride);
  const Index channels = in.rows();
  MatrixXd cols = MatrixXd::Zero(channels * 9, Index(ho) * wo);
  for (Index c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Index r = c * 9 + ky * 3 + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= w) continue;
            cols(r, Index(oy) * wo + ox) = in(c, Index(iy) * w + ix);
          }
        }
      }
  return cols;
}

MatrixXd col2im(const MatrixXd& cols, Index channels, int h, int w, int stride) {
  const int ho = conv_out(h, stride), wo = conv_out(w, stride);
  MatrixXd out = MatrixXd::Zero(channels, Index(h) * w);
  for (Index c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Index r = c * 9 + ky * 3 + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= w) continue;
            out(c, Index(iy) * w + ix) += cols(r, Index(oy) * wo + ox);
          }
        }
      }
  return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

MatrixXd silu(const MatrixXd& z) {
  return z.unaryExpr([](double v) { return v * sigmoid(v); });
}

MatrixXd silu_grad(const MatrixXd& z) {
  return z.unaryExpr([](double v) {
    const double s = sigmoid(v);
    return s * (1.0 + v * (1.0 - s));
  });
}

}  // namespace

struct TinyScoreNet::Layout : NetLayout {};

struct TinyScoreNet::Tape {
  int h = 0, w = 0, h2 = 0, w2 = 0;
  double sigma = 0, c_in = 0, c_skip = 0, c_out = 0, phi = 0, gain = 0;
  VectorXd pre_e, e;
  MatrixXd a0;
  std::array<MatrixXd, 5> cols;
  std::array<MatrixXd, 4> z, act;
  MatrixXd out;  // pre-gain output (1 x HW)
  MatrixXd f;    // gained output
};

NetArchitecture NetArchitecture::for_shape(int rows, int cols, int channels, int embed, double sigma_data,
                                           int max_template) {
  NetArchitecture a;
  a.rows = rows;
  a.cols = cols;
  a.channels = channels;
  a.embed = embed;
  a.sigma_data = sigma_data;
  a.template_stride = 1;
  while (Index(a.template_rows()) * a.template_cols() > max_template) ++a.template_stride;
  a.validate();
  return a;
}

void NetArchitecture::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("network grid must be non-empty");
  if (channels < 1 || embed < 1) throw ConfigError("network widths must be positive");
  if (template_stride < 1) throw ConfigError("template stride must be positive");
  if (!(sigma_data > 0)) throw ConfigError("sigma_data must be positive");
}

int NetArchitecture::parameter_count() const { return int(make_layout(*this).total); }

TinyScoreNet::TinyScoreNet(const NetArchitecture& arch) : arch_(arch) {
  arch_.validate();
  theta_ = VectorXd::Zero(make_layout(arch_).total);
}

TinyScoreNet::Layout TinyScoreNet::layout() const { return Layout{make_layout(arch_)}; }

void TinyScoreNet::initialize(Rng& rng, const Array2* template_init) {
  const Layout l = layout();
  theta_.setZero(l.total);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Index start, Index n, double scale) {
    for (Index i = 0; i < n; ++i) theta_[start + i] = scale * normal(rng);
  };
  const int e = arch_.embed;
  fill(l.w_embed, e, 2.0);
  fill(l.b_embed, e, 1.0);
  for (const auto& c : l.conv) {
    fill(c.w, Index(c.cout) * c.cin * 9, std::sqrt(2.0 / (c.cin * 9.0)));
    if (c.film >= 0) fill(c.film, Index(c.cout) * e, 1.0 / std::sqrt(double(e)));
  }
  if (template_init) {
    if (template_init->rows() != arch_.rows || template_init->cols() != arch_.cols)
      throw ShapeError("template init shape does not match network grid");
    const int s = arch_.template_stride, tr = arch_.template_rows(), tc = arch_.template_cols();
    Array2 sum = Array2::Zero(tr, tc), count = Array2::Zero(tr, tc);
    for (int y = 0; y < arch_.rows; ++y)
      for (int x = 0; x < arch_.cols; ++x) {
        sum(y / s, x / s) += (*template_init)(y, x);
        count(y / s, x / s) += 1;
      }
    Eigen::Map<Array2>(theta_.data() + l.tmpl, tr, tc) = sum.cwiseQuotient(count);
  }
}

Array2 TinyScoreNet::forward(const Array2& x, double sigma, Tape* tape) const {
  if (!(sigma > 0)) throw std::invalid_argument("network score needs sigma > 0");
  if (x.rows() != arch_.rows || x.cols() != arch_.cols)
    throw ShapeError("network input " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     " does not match trained grid " + std::to_string(arch_.rows) + "x" + std::to_string(arch_.cols));
  const Layout l = layout();
  const int h = arch_.rows, w = arch_.cols, e = arch_.embed, s = arch_.template_stride;
  const int h2 = conv_out(h, 2), w2 = conv_out(w, 2);
  const Index hw = Index(h) * w;
  const double* p = theta_.data();

  Tape local;
  Tape& t = tape ? *tape : local;
  t.h = h;
  t.w = w;
  t.h2 = h2;
  t.w2 = w2;
  t.sigma = sigma;
  const double sd2 = arch_.sigma_data * arch_.sigma_data;
  t.c_in = 1.0 / std::sqrt(sigma * sigma + sd2);
  t.c_skip = sd2 / (sigma * sigma + sd2);
  t.c_out = sigma * arch_.sigma_data * t.c_in;
  t.phi = std::log(sigma) / 4.0;

  const Eigen::Map<const VectorXd> w_embed(p + l.w_embed, e), b_embed(p + l.b_embed, e);
  t.pre_e = w_embed * t.phi + b_embed;
  t.e = silu(t.pre_e);

  const Eigen::Map<const Array2> tmpl(p + l.tmpl, arch_.template_rows(), arch_.template_cols());
  t.a0.resize(2, hw);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      t.a0(0, Index(y) * w + xx) = t.c_in * x(y, xx);
      t.a0(1, Index(y) * w + xx) = t.c_in * tmpl(y / s, xx / s);
    }

  auto hidden = [&](int i, const MatrixXd& in, int ih, int iw) {
    const auto& c = l.conv[std::size_t(i)];
    t.cols[std::size_t(i)] = im2col(in, ih, iw, c.stride);
    const Eigen::Map<const MatrixXd> wm(p + c.w, c.cout, Index(c.cin) * 9);
    const Eigen::Map<const VectorXd> b(p + c.b, c.cout);
    const Eigen::Map<const MatrixXd> film(p + c.film, c.cout, e);
    const VectorXd shift = b + film * t.e;
    MatrixXd z = wm * t.cols[std::size_t(i)];
    z.colwise() += shift;
    t.act[std::size_t(i)] = silu(z);
    t.z[std::size_t(i)] = std::move(z);
  };

  hidden(0, t.a0, h, w);
  hidden(1, t.act[0], h, w);
  hidden(2, t.act[1], h2, w2);
  MatrixXd cat(3 * arch_.channels, hw);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      cat.col(Index(y) * w + xx).head(2 * arch_.channels) = t.act[2].col(Index(y / 2) * w2 + xx / 2);
  cat.bottomRows(arch_.channels) = t.act[0];
  hidden(3, cat, h, w);

  const auto& c5 = l.conv[4];
  t.cols[4] = im2col(t.act[3], h, w, 1);
  const Eigen::Map<const MatrixXd> w5(p + c5.w, 1, Index(c5.cin) * 9);
  t.out = w5 * t.cols[4];
  t.out.array() += p[c5.b];
  t.out += p[l.alpha] * t.a0.row(0) + p[l.beta] * t.a0.row(1);

  const Eigen::Map<const VectorXd> gain_w(p + l.gain_w, e);
  t.gain = gain_w.dot(t.e) + p[l.gain_b];
  t.f = t.out * std::exp(t.gain);

  // D = c_skip x + (1 - c_skip) U(T) + c_out G, score = (D - x) / sigma^2.
  Array2 score(h, w);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      const Index k = Index(y) * w + xx;
      const double denoised = t.c_skip * x(y, xx) + (1 - t.c_skip) * tmpl(y / s, xx / s) + t.c_out * t.f(0, k);
      score(y, xx) = (denoised - x(y, xx)) / (sigma * sigma);
    }
  return score;
}

void TinyScoreNet::backward(const Tape& t, const Array2& dscore, Eigen::VectorXd& grad) const {
  if (grad.size() != theta_.size()) grad = VectorXd::Zero(theta_.size());
  const Layout l = layout();
  const int h = t.h, w = t.w, h2 = t.h2, w2 = t.w2, e = arch_.embed, s = arch_.template_stride;
  const int c = arch_.channels;
  const Index hw = Index(h) * w;
  const double* p = theta_.data();
  double* g = grad.data();

  // dD = dscore / sigma^2; G enters D scaled by c_out.
  const double inv_var = 1.0 / (t.sigma * t.sigma);
  MatrixXd df(1, hw);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) df(0, Index(y) * w + xx) = dscore(y, xx) * inv_var * t.c_out;

  const double dgain = (df.array() * t.f.array()).sum();
  const MatrixXd dout = df * std::exp(t.gain);
  VectorXd de = VectorXd::Zero(e);
  Eigen::Map<VectorXd>(g + l.gain_w, e) += dgain * t.e;
  g[l.gain_b] += dgain;
  de += dgain * Eigen::Map<const VectorXd>(p + l.gain_w, e);

  MatrixXd da0 = MatrixXd::Zero(2, hw);
  g[l.alpha] += dout.row(0).dot(t.a0.row(0));
  g[l.beta] += dout.row(0).dot(t.a0.row(1));
  da0.row(0) += p[l.alpha] * dout.row(0);
  da0.row(1) += p[l.beta] * dout.row(0);

  const auto& c5 = l.conv[4];
  const Eigen::Map<const MatrixXd> w5(p + c5.w, 1, Index(c5.cin) * 9);
  Eigen::Map<MatrixXd>(g + c5.w, 1, Index(c5.cin) * 9) += dout * t.cols[4].transpose();
  g[c5.b] += dout.sum();
  MatrixXd dact3 = col2im(w5.transpose() * dout, c5.cin, h, w, 1);

  // Returns the gradient with respect to the layer input.
  auto hidden_back = [&](int i, const MatrixXd& dact, int ih, int iw) {
    const auto& cv = l.conv[std::size_t(i)];
    const MatrixXd dz = dact.cwiseProduct(silu_grad(t.z[std::size_t(i)]));
    const VectorXd dshift = dz.rowwise().sum();
    Eigen::Map<MatrixXd>(g + cv.w, cv.cout, Index(cv.cin) * 9) += dz * t.cols[std::size_t(i)].transpose();
    Eigen::Map<VectorXd>(g + cv.b, cv.cout) += dshift;
    Eigen::Map<MatrixXd>(g + cv.film, cv.cout, e) += dshift * t.e.transpose();
    de += Eigen::Map<const MatrixXd>(p + cv.film, cv.cout, e).transpose() * dshift;
    const Eigen::Map<const MatrixXd> wm(p + cv.w, cv.cout, Index(cv.cin) * 9);
    return col2im(wm.transpose() * dz, cv.cin, ih, iw, cv.stride);
  };

  const MatrixXd dcat = hidden_back(3, dact3, h, w);
  MatrixXd dact2 = MatrixXd::Zero(2 * c, Index(h2) * w2);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) dact2.col(Index(y / 2) * w2 + xx / 2) += dcat.col(Index(y) * w + xx).head(2 * c);
  MatrixXd dact0 = dcat.bottomRows(c);
  const MatrixXd dact1 = hidden_back(2, dact2, h2, w2);
  dact0 += hidden_back(1, dact1, h, w);
  da0 += hidden_back(0, dact0, h, w);

  Eigen::Map<Array2> dtmpl(g + l.tmpl, arch_.template_rows(), arch_.template_cols());
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      dtmpl(y / s, xx / s) += t.c_in * da0(1, Index(y) * w + xx) + (1 - t.c_skip) * dscore(y, xx) * inv_var;

  const VectorXd dpre = de.cwiseProduct(silu_grad(t.pre_e));
  Eigen::Map<VectorXd>(g + l.w_embed, e) += dpre * t.phi;
  Eigen::Map<VectorXd>(g + l.b_embed, e) += dpre;
}

Array2 TinyScoreNet::evaluate(const Array2& x, double sigma) const { return forward(x, sigma, nullptr); }

Array2 TinyScoreNet::evaluate_with_gradient(const Array2& x, double sigma,
                                            const std::function<Array2(const Array2&)>& upstream,
                                            Eigen::VectorXd& grad) const {
  Tape tape;
  Array2 score = forward(x, sigma, &tape);
  const Array2 dscore = upstream(score);
  if (dscore.rows() != score.rows() || dscore.cols() != score.cols()) throw ShapeError("upstream gradient shape");
  backward(tape, dscore, grad);
  return score;
}

}  // namespace osmm
