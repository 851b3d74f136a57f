#pragma once

#include <functional>
#include <iostream>

#include "clutter/envs.hpp"
#include "clutter/mpnn.hpp"
#include "clutter/optim.hpp"

namespace clutter {

inline int sample_categorical(const std::vector<double>& p, Rng& rng) {
  double u = uniform_real(rng, 0.0, 1.0);
  double c = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last = static_cast<int>(i);
    c += p[i];
    if (u < c) return last;
  }
  if (last < 0) throw std::runtime_error("sampling from a zero distribution");
  return last;  // c fell short of 1 by rounding
}

inline int uniform_masked_index(const std::vector<char>& mask, Rng& rng) {
  std::vector<int> open;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) open.push_back(static_cast<int>(i));
  if (open.empty()) throw std::runtime_error("no unmasked entry to sample");
  return open[uniform_int(rng, 0, static_cast<int>(open.size()) - 1)];
}

// ---------------------------------------------------------------------------
// Soft-Q over production rules. The policy is a Boltzmann distribution over
// the feasible rules; training regresses Q toward the entropy-regularized
// one-step target from a hard-synced copy of the network.

struct SoftQConfig {
  double alpha = 0.2;       // temperature
  double gamma = 0.99;
  int replay_capacity = 20000;
  int batch_size = 32;
  int target_sync = 1000;   // updates between hard syncs
  long long total_steps = 100000;
  int train_every = 4;      // env steps per update
  int warmup = 500;         // buffered transitions before updates start
  double explore_eps = 0.05;  // floor of uniform-feasible exploration
};

inline std::vector<double> softq_probs(const Tensor& q,
                                       const std::vector<char>& mask,
                                       double alpha) {
  if (alpha <= 0.0) throw std::runtime_error("temperature must be positive");
  if (static_cast<std::size_t>(q.size()) != mask.size())
    throw std::runtime_error("mask length does not match Q row");
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) hi = std::max(hi, q.v[i] / alpha);
  if (hi == -std::numeric_limits<double>::infinity())
    throw std::runtime_error("every rule is infeasible");
  std::vector<double> p(mask.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) z += (p[i] = std::exp(q.v[i] / alpha - hi));
  for (double& x : p) x /= z;
  return p;
}

inline std::vector<double> softq_policy(const MPNNModel& model,
                                        const FeatureGraph& f,
                                        const std::vector<char>& mask,
                                        double alpha) {
  return softq_probs(model.q_values(f), mask, alpha);
}

// alpha * log sum_{unmasked} exp(q/alpha), the entropy-regularized state value.
inline double soft_value(const Tensor& q, const std::vector<char>& mask,
                         double alpha) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) hi = std::max(hi, q.v[i] / alpha);
  if (hi == -std::numeric_limits<double>::infinity())
    throw std::runtime_error("soft value of an all-masked state");
  double z = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) z += std::exp(q.v[i] / alpha - hi);
  return alpha * (hi + std::log(z));
}

struct GenTransition {
  FeatureGraph s;
  int a = 0;
  double r = 0.0;
  FeatureGraph s2;          // empty when done
  bool done = false;
  std::vector<char> mask2;  // feasibility at s2
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw std::runtime_error("replay capacity must be > 0");
  }

  void push(GenTransition t) {
    if (data_.size() < cap_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % cap_;
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return cap_; }
  const GenTransition& at(std::size_t i) const { return data_[i]; }

  const GenTransition& sample(Rng& rng) const {
    if (data_.empty()) throw std::runtime_error("sampling an empty buffer");
    return data_[uniform_int(rng, 0, static_cast<int>(data_.size()) - 1)];
  }

 private:
  std::size_t cap_;
  std::size_t next_ = 0;
  std::vector<GenTransition> data_;
};

// One regression step over a batch: mean squared error of Q(s,a) against
// r + gamma * soft_value(Q_target(s')) with a zero bootstrap on done.
// Gradients accumulate into the model; the caller owns zero_grad and the
// optimizer step. Returns the batch loss.
inline double softq_train_step(MPNNModel& model, const MPNNModel& target,
                               const std::vector<const GenTransition*>& batch,
                               double alpha, double gamma) {
  if (batch.empty()) throw std::runtime_error("empty training batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const GenTransition* tr : batch) {
    double y = tr->r;
    if (!tr->done)
      y += gamma * soft_value(target.q_values(tr->s2), tr->mask2, alpha);
    if (!std::isfinite(y)) throw std::runtime_error("non-finite Q target");
    Tape t;
    MPNNOut out = model.forward(t, tr->s);
    Var d = t.sub(t.at(out.q, 0, tr->a), t.leaf(Tensor::of_scalar(y)));
    Var l = t.mul(d, d);
    loss += t.value(l).v[0] * inv;
    t.backward(t.scale(l, inv));
  }
  return loss;
}

struct SoftQTrainResult {
  long long env_steps = 0;
  long long updates = 0;
  long long episodes = 0;
  double last_loss = 0.0;
};

// Synchronous single-core training loop. Per-episode env seeds derive from
// the master seed; the action/replay stream has its own child. log, when
// set, fires after every update with (env_step, loss).
inline SoftQTrainResult train_generation(
    MPNNModel& model, MPNNModel& target, GenEnv& env, const SoftQConfig& cfg,
    Optimizer& opt, std::uint64_t seed,
    const std::function<void(long long, double)>& log = {}) {
  target.sync_from(model);
  ReplayBuffer buf(static_cast<std::size_t>(cfg.replay_capacity));
  Rng rng = make_rng(derive_seed(seed, 1));
  SoftQTrainResult res;
  while (res.env_steps < cfg.total_steps) {
    env.reset(derive_seed(seed, 10000 + static_cast<std::uint64_t>(res.episodes++)));
    FeatureGraph s = env.observe();
    std::vector<char> mask = env.action_mask();
    while (!env.done() && res.env_steps < cfg.total_steps) {
      int a;
      if (uniform_real(rng, 0.0, 1.0) < cfg.explore_eps) {
        a = uniform_masked_index(mask, rng);
      } else {
        a = sample_categorical(softq_policy(model, s, mask, cfg.alpha), rng);
      }
      GenStepResult sr = env.step(a);
      ++res.env_steps;
      GenTransition tr;
      tr.s = std::move(s);
      tr.a = a;
      tr.r = sr.reward;
      tr.done = sr.done;
      if (!sr.done) {
        tr.s2 = env.observe();
        tr.mask2 = env.action_mask();
        s = tr.s2;
        mask = tr.mask2;
      }
      buf.push(std::move(tr));
      if (buf.size() >= static_cast<std::size_t>(cfg.warmup) &&
          res.env_steps % cfg.train_every == 0) {
        std::vector<const GenTransition*> batch;
        for (int i = 0; i < cfg.batch_size; ++i)
          batch.push_back(&buf.sample(rng));
        model.zero_grad();
        res.last_loss =
            softq_train_step(model, target, batch, cfg.alpha, cfg.gamma);
        opt.step(model);
        if (++res.updates % cfg.target_sync == 0) target.sync_from(model);
        if (log) log(res.env_steps, res.last_loss);
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Exploration policies. Actions are (pick id, place id) with 0 = tray floor.
// The network's pick/place logits live on feature rows; these helpers line
// the env mask up with those rows.

struct ExpAction {
  int pick = 0;
  int place = 0;
};

inline bool operator==(const ExpAction& a, const ExpAction& b) {
  return a.pick == b.pick && a.place == b.place;
}

inline std::vector<char> pick_mask_rows(const FeatureGraph& f,
                                        const ExpActionMask& m) {
  std::vector<char> out(f.rows(), 0);
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (!m.pick[i]) continue;
    int row = f.row_of(m.ids[i]);
    if (row >= 0) out[row] = 1;
  }
  return out;
}

// Mask over feature rows plus one trailing floor slot, for a fixed pick.
inline std::vector<char> place_mask_rows(const FeatureGraph& f,
                                         const ExpActionMask& m, int pick_id) {
  std::vector<char> out(f.rows() + 1, 0);
  const int cols = m.cols();
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (m.ids[i] != pick_id) continue;
    for (std::size_t j = 0; j < m.ids.size(); ++j) {
      if (!m.place[i * cols + j]) continue;
      int row = f.row_of(m.ids[j]);
      if (row >= 0) out[row] = 1;
    }
    if (m.place[i * cols + m.ids.size()]) out[f.rows()] = 1;
  }
  return out;
}

// Factorized sample: pick from the masked pick head, then place from the
// masked place head conditioned on that pick.
inline ExpAction sample_exploration_action(const MPNNModel& model,
                                           const FeatureGraph& f,
                                           const ExpActionMask& mask,
                                           Rng& rng) {
  Tape t;
  MPNNOut out = model.forward(t, f);
  std::vector<char> pm = pick_mask_rows(f, mask);
  const Tensor& lp_pick = t.value(t.masked_log_softmax_col(out.pick, pm));
  std::vector<double> pp(pm.size(), 0.0);
  for (std::size_t i = 0; i < pm.size(); ++i)
    if (pm[i]) pp[i] = std::exp(lp_pick.v[i]);
  int prow = sample_categorical(pp, rng);
  ExpAction a;
  a.pick = f.node_ids[prow];
  std::vector<char> qm = place_mask_rows(f, mask, a.pick);
  Var logits = t.concat_rows(out.place, out.floor);
  const Tensor& lp_place = t.value(t.masked_log_softmax_col(logits, qm));
  std::vector<double> pq(qm.size(), 0.0);
  for (std::size_t i = 0; i < qm.size(); ++i)
    if (qm[i]) pq[i] = std::exp(lp_place.v[i]);
  int qrow = sample_categorical(pq, rng);
  a.place = qrow < f.rows() ? f.node_ids[qrow] : 0;
  return a;
}

// Mode of the factorized policy; ties go to the lowest row.
inline ExpAction greedy_exploration_action(const MPNNModel& model,
                                           const FeatureGraph& f,
                                           const ExpActionMask& mask) {
  Tape t;
  MPNNOut out = model.forward(t, f);
  std::vector<char> pm = pick_mask_rows(f, mask);
  const Tensor& pick = t.value(out.pick);
  int prow = -1;
  for (std::size_t i = 0; i < pm.size(); ++i)
    if (pm[i] && (prow < 0 || pick.v[i] > pick.v[prow]))
      prow = static_cast<int>(i);
  if (prow < 0) throw std::runtime_error("no pickable object");
  ExpAction a;
  a.pick = f.node_ids[prow];
  std::vector<char> qm = place_mask_rows(f, mask, a.pick);
  const Tensor& logits = t.value(t.concat_rows(out.place, out.floor));
  int qrow = -1;
  for (std::size_t i = 0; i < qm.size(); ++i)
    if (qm[i] && (qrow < 0 || logits.v[i] > logits.v[qrow]))
      qrow = static_cast<int>(i);
  if (qrow < 0) throw std::runtime_error("no placement target");
  a.place = qrow < f.rows() ? f.node_ids[qrow] : 0;
  return a;
}

inline double state_value(const MPNNModel& model, const FeatureGraph& f) {
  Tape t;
  return t.value(model.forward(t, f).value).v[0];
}

// ---------------------------------------------------------------------------
// Advantage actor-critic on the privileged view.

struct A2CConfig {
  int n = 8;                  // rollout length
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double gamma = 0.99;
};

struct ExpRolloutStep {
  FeatureGraph obs;
  ExpActionMask mask;
  ExpAction action;
  double reward = 0.0;
  bool done = false;  // episode ended on this step
};

// One gradient accumulation over a rollout. Returns R_t backward from the
// bootstrap (zero across episode ends), treats the advantage as a constant,
// and charges value error and an entropy bonus alongside the policy term.
// Caller owns zero_grad and the optimizer step. Returns the summed loss.
inline double a2c_update(MPNNModel& model,
                         const std::vector<ExpRolloutStep>& steps,
                         double bootstrap, const A2CConfig& cfg) {
  if (cfg.n < 1) throw std::runtime_error("rollout length must be >= 1");
  if (steps.empty()) throw std::runtime_error("empty rollout");
  std::vector<double> ret(steps.size(), 0.0);
  double r = steps.back().done ? 0.0 : bootstrap;
  for (int i = static_cast<int>(steps.size()) - 1; i >= 0; --i) {
    if (steps[i].done) r = 0.0;
    r = steps[i].reward + cfg.gamma * r;
    ret[i] = r;
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const ExpRolloutStep& st = steps[i];
    Tape t;
    MPNNOut out = model.forward(t, st.obs);
    int prow = st.obs.row_of(st.action.pick);
    int qrow = st.action.place == 0 ? st.obs.rows()
                                    : st.obs.row_of(st.action.place);
    if (prow < 0 || qrow < 0)
      throw std::runtime_error("rollout action missing from observation");
    std::vector<char> pm = pick_mask_rows(st.obs, st.mask);
    std::vector<char> qm = place_mask_rows(st.obs, st.mask, st.action.pick);
    Var lp_pick = t.masked_log_softmax_col(out.pick, pm);
    Var lp_place =
        t.masked_log_softmax_col(t.concat_rows(out.place, out.floor), qm);
    Var logp = t.add(t.at(lp_pick, prow, 0), t.at(lp_place, qrow, 0));
    double adv = ret[i] - t.value(out.value).v[0];
    Var verr = t.sub(out.value, t.leaf(Tensor::of_scalar(ret[i])));
    // sum p*log p over both heads; masked slots contribute exp(0)*0 = 0
    Var neg_ent = t.add(t.sum_all(t.mul(t.exp(lp_pick), lp_pick)),
                        t.sum_all(t.mul(t.exp(lp_place), lp_place)));
    Var l = t.add(t.scale(logp, -adv),
                  t.add(t.scale(t.mul(verr, verr), cfg.value_coef),
                        t.scale(neg_ent, cfg.entropy_coef)));
    loss += t.value(l).v[0];
    t.backward(l);
  }
  return loss;
}

struct A2CTrainResult {
  long long env_steps = 0;
  long long updates = 0;
  long long episodes = 0;
  double last_loss = 0.0;
};

// n-step A2C over a dataset of source graphs, cycling scenes round-robin.
// A deadlocked mask (nothing movable) ends the episode without reward, and
// scenes that start fully visible are skipped for training purposes.
inline A2CTrainResult train_exploration_privileged(
    MPNNModel& model, ExpEnv& env, const std::vector<SceneGraph>& dataset,
    const A2CConfig& cfg, Optimizer& opt, long long total_steps,
    std::uint64_t seed,
    const std::function<void(long long, double)>& log = {}) {
  if (dataset.empty()) throw std::runtime_error("empty scene dataset");
  Rng rng = make_rng(derive_seed(seed, 2));
  A2CTrainResult res;
  bool need_reset = true;
  long long dry_resets = 0;
  const long long dry_limit = 2 * static_cast<long long>(dataset.size()) + 16;
  while (res.env_steps < total_steps) {
    std::vector<ExpRolloutStep> roll;
    while (static_cast<int>(roll.size()) < cfg.n &&
           res.env_steps < total_steps) {
      if (need_reset) {
        if (dry_resets > dry_limit)
          throw std::runtime_error("no explorable scene in the dataset");
        const SceneGraph& src =
            dataset[static_cast<std::size_t>(res.episodes) % dataset.size()];
        env.reset(src, derive_seed(seed, 20000 + static_cast<std::uint64_t>(
                                             res.episodes)));
        ++res.episodes;
        ++dry_resets;
        if (env.done()) continue;  // nothing hidden, next scene
        need_reset = false;
      }
      ExpRolloutStep st;
      st.obs = env.observe_privileged();
      st.mask = env.action_mask();
      bool movable = false;
      for (char c : st.mask.pick) movable = movable || c;
      if (!movable) {
        if (!roll.empty()) roll.back().done = true;
        need_reset = true;
        continue;
      }
      st.action = sample_exploration_action(model, st.obs, st.mask, rng);
      ExpStepResult sr = env.step(st.action.pick, st.action.place);
      st.reward = sr.reward;
      st.done = sr.done;
      ++res.env_steps;
      dry_resets = 0;
      roll.push_back(std::move(st));
      if (sr.done) need_reset = true;
    }
    if (roll.empty()) break;
    double bootstrap = 0.0;
    if (!roll.back().done)
      bootstrap = state_value(model, env.observe_privileged());
    model.zero_grad();
    res.last_loss = a2c_update(model, roll, bootstrap, cfg);
    opt.step(model);
    ++res.updates;
    if (log) log(res.env_steps, res.last_loss);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Behavior cloning: the student sees the partial observation the teacher's
// action was recorded under.

struct BCPair {
  FeatureGraph obs;    // student view
  ExpActionMask mask;  // mask in force when the expert acted
  ExpAction action;
};

struct BCDataset {
  std::vector<BCPair> pairs;
};

// Teacher runs on the privileged view (greedily by default) while the
// student-view observation and the chosen action are recorded.
inline BCDataset collect_bc_dataset(const MPNNModel& teacher, ExpEnv& env,
                                    const std::vector<SceneGraph>& dataset,
                                    int n_samples, std::uint64_t seed,
                                    bool greedy = true) {
  if (dataset.empty()) throw std::runtime_error("empty scene dataset");
  Rng rng = make_rng(derive_seed(seed, 3));
  BCDataset out;
  std::uint64_t ep = 0;
  std::uint64_t dry = 0;
  const std::uint64_t dry_limit = 2 * dataset.size() + 16;
  while (static_cast<int>(out.pairs.size()) < n_samples) {
    if (dry > dry_limit)
      throw std::runtime_error("no explorable scene in the dataset");
    std::size_t before = out.pairs.size();
    env.reset(dataset[static_cast<std::size_t>(ep) % dataset.size()],
              derive_seed(seed, 30000 + ep));
    ++ep;
    while (!env.done() && static_cast<int>(out.pairs.size()) < n_samples) {
      ExpActionMask mask = env.action_mask();
      bool movable = false;
      for (char c : mask.pick) movable = movable || c;
      if (!movable) break;  // deadlocked scene
      FeatureGraph priv = env.observe_privileged();
      ExpAction a = greedy
                        ? greedy_exploration_action(teacher, priv, mask)
                        : sample_exploration_action(teacher, priv, mask, rng);
      BCPair pair;
      pair.obs = env.observe();
      pair.mask = mask;
      pair.action = a;
      out.pairs.push_back(std::move(pair));
      env.step(a.pick, a.place);
    }
    dry = out.pairs.size() > before ? 0 : dry + 1;
  }
  return out;
}

// Negative log-likelihood of the expert actions, summed over the batch.
// Pairs whose action the student-view mask rejects are dropped with a
// warning. Gradients accumulate; caller owns zero_grad and the step.
inline double bc_update(MPNNModel& student,
                        const std::vector<const BCPair*>& batch) {
  if (batch.empty()) throw std::runtime_error("empty training batch");
  double loss = 0.0;
  for (const BCPair* p : batch) {
    int prow = p->obs.row_of(p->action.pick);
    int qrow = p->action.place == 0 ? p->obs.rows()
                                    : p->obs.row_of(p->action.place);
    if (prow < 0 || qrow < 0 ||
        !p->mask.allows(p->action.pick, p->action.place)) {
      std::cerr << "bc_update: expert action (" << p->action.pick << ","
                << p->action.place << ") infeasible under observation, "
                << "sample dropped\n";
      continue;
    }
    Tape t;
    MPNNOut out = student.forward(t, p->obs);
    Var lp_pick = t.masked_log_softmax_col(out.pick,
                                           pick_mask_rows(p->obs, p->mask));
    Var lp_place = t.masked_log_softmax_col(
        t.concat_rows(out.place, out.floor),
        place_mask_rows(p->obs, p->mask, p->action.pick));
    Var l = t.scale(
        t.add(t.at(lp_pick, prow, 0), t.at(lp_place, qrow, 0)), -1.0);
    loss += t.value(l).v[0];
    t.backward(l);
  }
  return loss;
}

// Same trunk and policy heads as the teacher, fresh weights, no value head.
inline MPNNModel make_student(const MPNNModel& teacher, std::uint64_t seed) {
  MPNNConfig cfg = teacher.config();
  cfg.value_head = false;
  return MPNNModel(cfg, seed);
}

// Minibatch SGD over shuffled epochs. Returns the last epoch's mean loss.
inline double train_bc(MPNNModel& student, const BCDataset& data,
                       Optimizer& opt, int epochs, int batch_size,
                       std::uint64_t seed,
                       const std::function<void(int, double)>& log = {}) {
  if (data.pairs.empty()) throw std::runtime_error("empty dataset");
  Rng rng = make_rng(derive_seed(seed, 4));
  std::vector<int> order(data.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  double epoch_loss = 0.0;
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0.0;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
      std::vector<const BCPair*> batch;
      for (std::size_t j = i; j < order.size() && batch.size() <
                                  static_cast<std::size_t>(batch_size); ++j)
        batch.push_back(&data.pairs[order[j]]);
      student.zero_grad();
      epoch_loss += bc_update(student, batch);
      opt.step(student);
    }
    epoch_loss /= static_cast<double>(data.pairs.size());
    if (log) log(e, epoch_loss);
  }
  return epoch_loss;
}

// Fraction of pairs where the student's mode equals the recorded action.
inline double bc_agreement(const MPNNModel& student,
                           const std::vector<BCPair>& pairs) {
  if (pairs.empty()) return 1.0;
  int hit = 0;
  for (const BCPair& p : pairs) {
    ExpAction a = greedy_exploration_action(student, p.obs, p.mask);
    hit += a == p.action ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Baselines.

// Uniform over the feasible production rules.
inline int baseline_rg(const SceneGraph& g, const RuleSet& rules, Rng& rng) {
  return uniform_masked_index(feasible_mask(g, rules), rng);
}

// Uniform over the allowed (pick, place) pairs.
inline ExpAction baseline_re(const ExpActionMask& m, Rng& rng) {
  std::vector<ExpAction> open;
  const int cols = m.cols();
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (!m.pick[i]) continue;
    for (std::size_t j = 0; j < m.ids.size(); ++j)
      if (m.place[i * cols + j]) open.push_back({m.ids[i], m.ids[j]});
    if (m.place[i * cols + m.ids.size()]) open.push_back({m.ids[i], 0});
  }
  if (open.empty()) throw std::runtime_error("no open action pair");
  return open[uniform_int(rng, 0, static_cast<int>(open.size()) - 1)];
}

// Largest-first: relocate the biggest visible object that has not been
// moved yet, preferring the floor, else the target with the most free top
// area. Ties break toward the lower id. Once every candidate has been
// moved the set starts over.
class LargestFirst {
 public:
  void reset() { moved_.clear(); }

  ExpAction act(const ExpEnv& env) {
    ExpActionMask mask = env.action_mask();
    const Catalog& cat = env.catalog();
    const RealizedScene& scene = env.scene();
    std::vector<int> picks;
    for (std::size_t i = 0; i < mask.ids.size(); ++i)
      if (mask.pick[i]) picks.push_back(mask.ids[i]);
    if (picks.empty()) throw std::runtime_error("no pickable object");
    auto area = [&](int id) {
      return polygon_area(body_shape(cat, *scene.body(id)).footprint);
    };
    std::sort(picks.begin(), picks.end(), [&](int a, int b) {
      double aa = area(a), ab = area(b);
      return aa != ab ? aa > ab : a < b;
    });
    bool all_moved = true;
    for (int id : picks) all_moved = all_moved && moved_.count(id) > 0;
    if (all_moved) moved_.clear();
    for (int id : picks) {
      if (moved_.count(id)) continue;
      if (mask.allows(id, 0)) {
        moved_.insert(id);
        return {id, 0};
      }
      int best = -1;
      double best_free = 0.0;
      for (int target : mask.ids) {
        if (!mask.allows(id, target)) continue;
        double free = area(target);
        for (const auto& [rider, sup] : scene.support_map)
          for (int s : sup)
            if (s == target) free -= area(rider);
        if (best < 0 || free > best_free) {
          best = target;
          best_free = free;
        }
      }
      if (best >= 0) {
        moved_.insert(id);
        return {id, best};
      }
    }
    // every unmoved pick is stuck; fall back to any legal pair
    for (int id : picks)
      for (int target : mask.ids)
        if (mask.allows(id, target)) return {id, target};
    for (int id : picks)
      if (mask.allows(id, 0)) return {id, 0};
    throw std::runtime_error("no legal placement");
  }

 private:
  std::set<int> moved_;
};

}  // namespace clutter
