#pragma once

#include <fstream>
#include <sstream>

#include "clutter/autodiff.hpp"
#include "clutter/features.hpp"

namespace clutter {

struct MPNNConfig {
  int node_in = 0;        // feature width of node rows
  int edge_in = 0;        // feature width of edge rows
  int node_dim = 32;
  int edge_dim = 3;
  int mp_steps = 4;
  double slope = 0.01;    // leaky-relu
  int q_dim = 0;          // rule Q head size; 0 disables
  bool value_head = false;
  bool node_heads = false;  // pick/place/floor logits
  bool learned_g_init = false;
};

// Everything a forward pass can produce. Heads that the model lacks stay
// with idx -1.
struct MPNNOut {
  Var g;      // 1 x node_dim, after the last step
  Var nodes;  // n x node_dim
  Var q;      // 1 x q_dim
  Var value;  // 1 x 1
  Var pick;   // n x 1
  Var place;  // n x 1
  Var floor;  // 1 x 1
};

class MPNNModel {
 public:
  struct Param {
    std::string name;
    Tensor w;
    Tensor g;
  };

  MPNNModel() = default;

  MPNNModel(const MPNNConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.node_in <= 0 || cfg.edge_in <= 0)
      throw std::invalid_argument("feature widths must be set");
    Rng rng = make_rng(seed);
    auto lin = [&](const std::string& n, int in, int out) {
      add(n + ".w", xavier_init(in, out, rng));
      add(n + ".b", Tensor(1, out));
    };
    const int d = cfg.node_dim;
    lin("node_embed", cfg.node_in, d);
    lin("edge_embed", cfg.edge_in, cfg.edge_dim);
    lin("msg", cfg.edge_dim + d, d);
    lin("agg", 3 * d, d);
    lin("att", d, 1);
    lin("feat", d, d);
    lin("glb", 2 * d, d);
    if (cfg.learned_g_init) add("g0", Tensor(1, d));
    if (cfg.q_dim > 0) lin("q", d, cfg.q_dim);
    if (cfg.value_head) lin("value", d, 1);
    if (cfg.node_heads) {
      lin("pick", d, 1);
      lin("place", d, 1);
      lin("floor", d, 1);
    }
  }

  const MPNNConfig& config() const { return cfg_; }
  std::vector<Param>& params() { return ps_; }
  const std::vector<Param>& params() const { return ps_; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const Param& p : ps_) n += p.w.size();
    return n;
  }

  void zero_grad() {
    for (Param& p : ps_) p.g.zero();
  }

  // Copies parameter values (not gradients) from another model.
  void sync_from(const MPNNModel& src) {
    if (src.ps_.size() != ps_.size())
      throw std::logic_error("model shapes differ");
    for (std::size_t i = 0; i < ps_.size(); ++i) ps_[i].w = src.ps_[i].w;
  }

  MPNNOut forward(Tape& t, const FeatureGraph& f) const {
    if (f.node_width != cfg_.node_in || f.edge_width != cfg_.edge_in)
      throw std::invalid_argument("feature width mismatch");
    const int n = f.rows();
    const int ne = static_cast<int>(f.edges.size());
    Tensor X(n, f.node_width);
    X.v = f.nodes;
    Tensor E(ne, f.edge_width);
    E.v = f.edge_feats;
    std::vector<int> src(ne), dst(ne);
    for (int i = 0; i < ne; ++i) {
      src[i] = f.edges[i].first;
      dst[i] = f.edges[i].second;
    }

    Var v = t.leaky_relu(linear(t, t.leaf(X), "node_embed"), cfg_.slope);
    Var e = t.leaky_relu(linear(t, t.leaf(E), "edge_embed"), cfg_.slope);
    Var g = cfg_.learned_g_init ? leaf(t, "g0")
                                : t.leaf(Tensor(1, cfg_.node_dim));

    for (int step = 0; step < cfg_.mp_steps; ++step) {
      Var msgs = t.leaky_relu(
          linear(t, t.concat_cols(e, t.gather_rows(v, src)), "msg"),
          cfg_.slope);
      Var m = t.segment_max(msgs, dst, n);
      Var upd = t.leaky_relu(
          linear(t, t.concat_cols(v, m, t.broadcast_row(g, n)), "agg"),
          cfg_.slope);
      v = t.add(v, upd);
      Var att = t.softmax_col(linear(t, v, "att"));
      Var feat = t.leaky_relu(linear(t, v, "feat"), cfg_.slope);
      Var pooled = t.rows_weighted_sum(feat, att);
      Var gu = t.leaky_relu(
          linear(t, t.concat_cols(g, pooled), "glb"), cfg_.slope);
      g = t.add(g, gu);
    }

    MPNNOut out;
    out.g = g;
    out.nodes = v;
    if (cfg_.q_dim > 0) out.q = linear(t, g, "q");
    if (cfg_.value_head) out.value = linear(t, g, "value");
    if (cfg_.node_heads) {
      out.pick = linear(t, v, "pick");
      out.place = linear(t, v, "place");
      out.floor = linear(t, g, "floor");
    }
    return out;
  }

  // Plain (tape-free) forward when only head values are needed.
  Tensor q_values(const FeatureGraph& f) const {
    Tape t;
    return t.value(forward(t, f).q);
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "mpnn 1\n";
    os << "config " << cfg_.node_in << " " << cfg_.edge_in << " "
       << cfg_.node_dim << " " << cfg_.edge_dim << " " << cfg_.mp_steps << " "
       << format_double(cfg_.slope) << " " << cfg_.q_dim << " "
       << int(cfg_.value_head) << " " << int(cfg_.node_heads) << " "
       << int(cfg_.learned_g_init) << "\n";
    for (const Param& p : ps_) {
      os << "param " << p.name << " " << p.w.rows << " " << p.w.cols << "\n";
      os << tensor_to_text(p.w) << "\n";
    }
    os << "end\n";
    if (!os) throw std::runtime_error("short write to " + path);
  }

  static MPNNModel load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(is, line) || line != "mpnn 1")
      throw std::runtime_error("bad checkpoint header in " + path);
    if (!std::getline(is, line)) throw std::runtime_error("truncated " + path);
    std::vector<std::string> c = split_ws(line);
    if (c.size() != 11 || c[0] != "config")
      throw std::runtime_error("bad config line in " + path);
    MPNNConfig cfg;
    cfg.node_in = std::stoi(c[1]);
    cfg.edge_in = std::stoi(c[2]);
    cfg.node_dim = std::stoi(c[3]);
    cfg.edge_dim = std::stoi(c[4]);
    cfg.mp_steps = std::stoi(c[5]);
    cfg.slope = std::stod(c[6]);
    cfg.q_dim = std::stoi(c[7]);
    cfg.value_head = c[8] == "1";
    cfg.node_heads = c[9] == "1";
    cfg.learned_g_init = c[10] == "1";
    MPNNModel m(cfg, 0);
    for (Param& p : m.ps_) {
      if (!std::getline(is, line)) throw std::runtime_error("truncated");
      std::vector<std::string> h = split_ws(line);
      if (h.size() != 4 || h[0] != "param" || h[1] != p.name)
        throw std::runtime_error("unexpected param line: " + line);
      if (std::stoi(h[2]) != p.w.rows || std::stoi(h[3]) != p.w.cols)
        throw std::runtime_error("param shape changed: " + p.name);
      if (!std::getline(is, line)) throw std::runtime_error("truncated");
      tensor_from_text(p.w, line);
    }
    if (!std::getline(is, line) || line != "end")
      throw std::runtime_error("missing end marker in " + path);
    return m;
  }

 private:
  void add(const std::string& name, Tensor t) {
    Param p;
    p.name = name;
    p.g = Tensor(t.rows, t.cols);
    p.w = std::move(t);
    ps_.push_back(std::move(p));
  }

  int find(const std::string& name) const {
    for (std::size_t i = 0; i < ps_.size(); ++i)
      if (ps_[i].name == name) return static_cast<int>(i);
    throw std::logic_error("no parameter " + name);
  }

  Var leaf(Tape& t, const std::string& name) const {
    Param& p = const_cast<Param&>(ps_[find(name)]);
    return t.leaf(p.w, &p.g);
  }

  Var linear(Tape& t, Var x, const std::string& name) const {
    return t.add_row(t.matmul(x, leaf(t, name + ".w")), leaf(t, name + ".b"));
  }

  MPNNConfig cfg_;
  std::vector<Param> ps_;
};

}  // namespace clutter
