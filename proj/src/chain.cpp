#include "dirapprox/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "dirapprox/error.hpp"
#include "dirapprox/parallel.hpp"
#include "dirapprox/text.hpp"
#include "dirapprox/variates.hpp"

namespace dirapprox {

std::int64_t ChainState::last() const {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  return population - total;
}

void ChainState::validate() const {
  if (population < 1) fail(ErrorCode::kInvalidArgument, "population N must be positive");
  if (counts.empty()) fail(ErrorCode::kDimension, "chain state needs K >= 2 types");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) {
      fail(ErrorCode::kDomain, "allele count " + std::to_string(i + 1) + " is negative");
    }
  }
  if (last() < 0) fail(ErrorCode::kDomain, "allele counts exceed N");
}

SimplexPoint ChainState::proportions() const {
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = static_cast<double>(counts[i]) / static_cast<double>(population);
  }
  return SimplexPoint(std::move(w));
}

std::string ChainModel::descriptor() const {
  std::string out = offspring ? offspring->descriptor()
                              : "wright-fisher-direct(N=" + std::to_string(population) + ")";
  out += ";K=" + std::to_string(dim());
  out += mutation.is_pim() ? ";mutation=pim" : ";mutation=general";
  return out;
}

ChainStepper::ChainStepper(const ChainModel& model)
    : model_(model),
      k_(model.dim()),
      q_(k_),
      full_(k_),
      children_(k_),
      draw_(k_),
      identity_row_(k_) {
  if (model.offspring) {
    if (model.offspring->population() != model.population) {
      fail(ErrorCode::kInvalidArgument, "offspring model and chain disagree on N");
    }
    offspring_.resize(model.population);
    labels_.resize(model.population);
  }
  for (std::size_t t = 0; t < k_; ++t) identity_row_[t] = model.mutation.p_out(t) == 0.0;
}

void ChainStepper::mutate_children(std::span<std::int64_t> counts, RngStream& rng) {
  std::fill(full_.begin(), full_.end(), 0);
  for (std::size_t t = 0; t < k_; ++t) {
    if (children_[t] == 0) continue;
    if (identity_row_[t]) {
      full_[t] += children_[t];
      continue;
    }
    multinomial_variate(rng, children_[t], model_.mutation.row(t), draw_);
    for (std::size_t j = 0; j < k_; ++j) full_[j] += draw_[j];
  }
  for (std::size_t j = 0; j + 1 < k_; ++j) counts[j] = full_[j];
}

void ChainStepper::advance(std::span<std::int64_t> counts, RngStream& rng) {
  const std::int64_t n = model_.population;
  std::int64_t rest = n;
  for (std::size_t j = 0; j + 1 < k_; ++j) rest -= counts[j];
  auto count_of = [&](std::size_t t) { return t + 1 < k_ ? counts[t] : rest; };

  if (!model_.offspring) {
    const double inv_n = 1.0 / static_cast<double>(n);
    std::fill(q_.begin(), q_.end(), 0.0);
    for (std::size_t m = 0; m < k_; ++m) {
      const double wm = static_cast<double>(count_of(m)) * inv_n;
      if (wm == 0.0) continue;
      const auto row = model_.mutation.row(m);
      for (std::size_t j = 0; j < k_; ++j) q_[j] += row[j] * wm;
    }
    multinomial_variate(rng, n, q_, draw_);
    for (std::size_t j = 0; j + 1 < k_; ++j) counts[j] = draw_[j];
    return;
  }

  const auto& off = *model_.offspring;
  for (std::size_t t = 0; t < k_; ++t) children_[t] = count_of(t);
  if (off.kind() == OffspringKind::kMoran) {
    // Slot I reproduces and slot J dies; under a uniform labeling their types
    // are a size-biased draw without replacement from the counts.
    auto type_at = [&](std::int64_t idx, std::size_t skip) {
      for (std::size_t t = 0; t < k_; ++t) {
        std::int64_t c = children_[t] - (t == skip ? 1 : 0);
        if (idx < c) return t;
        idx -= c;
      }
      return k_ - 1;
    };
    const std::size_t ti = type_at(static_cast<std::int64_t>(uniform_index(rng, n)), k_);
    const std::size_t tj = type_at(static_cast<std::int64_t>(uniform_index(rng, n - 1)), ti);
    ++children_[ti];
    --children_[tj];
  } else {
    sample_offspring(off, rng, offspring_);
    std::size_t pos = 0;
    for (std::size_t t = 0; t < k_; ++t) {
      for (std::int64_t c = 0; c < count_of(t); ++c) labels_[pos++] = static_cast<std::int32_t>(t);
    }
    for (std::size_t i = labels_.size() - 1; i > 0; --i) {
      std::swap(labels_[i], labels_[uniform_index(rng, i + 1)]);
    }
    std::fill(children_.begin(), children_.end(), 0);
    for (std::size_t slot = 0; slot < labels_.size(); ++slot) {
      children_[labels_[slot]] += offspring_[slot];
    }
  }
  mutate_children(counts, rng);
}

ChainState step_wright_fisher(const ChainState& x, const MutationMatrix& p, RngStream& rng) {
  x.validate();
  if (x.dim() != p.dim()) fail(ErrorCode::kDimension, "state and mutation dimensions differ");
  const ChainModel model{static_cast<int>(x.population), p, std::nullopt};
  ChainStepper stepper(model);
  ChainState out = x;
  stepper.advance(out.counts, rng);
  return out;
}

ChainState step_cannings(const ChainState& x, const OffspringModel& m, const MutationMatrix& p,
                         RngStream& rng) {
  x.validate();
  if (x.dim() != p.dim()) fail(ErrorCode::kDimension, "state and mutation dimensions differ");
  const ChainModel model{static_cast<int>(x.population), p, m};
  ChainStepper stepper(model);
  ChainState out = x;
  stepper.advance(out.counts, rng);
  return out;
}

std::int64_t default_burn_in(const ChainModel& model) {
  const std::size_t k = model.dim();
  const double n = model.population;
  double min_rate = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (i != j) best = std::max(best, model.mutation(i, j));
    }
    min_rate = std::min(min_rate, best);
  }
  const double factor = min_rate > 0.0 ? std::max(1.0, 1.0 / (n * min_rate)) : 1e300;
  return static_cast<std::int64_t>(std::min(1e7, std::ceil(20.0 * n * factor)));
}

std::int64_t default_thin(const ChainModel& model) { return model.population; }

namespace {

std::vector<std::int64_t> default_initial(const ChainModel& model) {
  const std::size_t k = model.dim();
  std::vector<double> weight(k, 1.0);
  if (model.mutation.is_pim()) {
    const auto pi = model.mutation.pi();
    double total = 0.0;
    for (double v : pi) total += v;
    if (total > 0.0) {
      for (std::size_t j = 0; j < k; ++j) weight[j] = pi[j] / total;
    }
  } else {
    for (auto& w : weight) w = 1.0 / static_cast<double>(k);
  }
  std::vector<std::int64_t> counts(k - 1);
  std::int64_t used = 0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    counts[j] = static_cast<std::int64_t>(std::floor(weight[j] * model.population));
    used += counts[j];
  }
  if (used > model.population) counts.assign(k - 1, 0);
  return counts;
}

}  // namespace

StationaryRun run_to_stationarity(const ChainModel& model, const RunOptions& options,
                                  const RngStream& rng) {
  if (model.population < 1) fail(ErrorCode::kInvalidArgument, "population N must be positive");
  if (options.n_samples == 0) fail(ErrorCode::kInvalidArgument, "n_samples must be positive");
  if (options.replicates == 0) fail(ErrorCode::kInvalidArgument, "replicates must be positive");
  check_irreducible(model.mutation);
  const std::size_t k = model.dim();
  const std::int64_t burn_in = options.burn_in.value_or(default_burn_in(model));
  const std::int64_t thin = options.thin.value_or(default_thin(model));
  if (burn_in < 0) fail(ErrorCode::kInvalidArgument, "burn_in must be non-negative");
  if (thin < 1) fail(ErrorCode::kInvalidArgument, "thin must be positive");
  ChainState start{options.initial.value_or(default_initial(model)), model.population};
  if (start.dim() != k) fail(ErrorCode::kDimension, "initial state needs K-1 counts");
  start.validate();

  const std::size_t reps = std::min(options.replicates, options.n_samples);
  std::vector<std::size_t> sizes(reps, options.n_samples / reps);
  for (std::size_t r = 0; r < options.n_samples % reps; ++r) ++sizes[r];
  std::vector<std::vector<double>> parts(reps);
  const double inv_n = 1.0 / static_cast<double>(model.population);

  parallel_for(reps, options.workers, [&](std::size_t r) {
    RngStream stream = rng.split(r);
    ChainStepper stepper(model);
    std::vector<std::int64_t> counts = start.counts;
    for (std::int64_t t = 0; t < burn_in; ++t) stepper.advance(counts, stream);
    auto& out = parts[r];
    out.reserve(sizes[r] * (k - 1));
    for (std::size_t s = 0; s < sizes[r]; ++s) {
      for (std::int64_t t = 0; t < thin; ++t) stepper.advance(counts, stream);
      for (std::size_t j = 0; j + 1 < k; ++j) {
        out.push_back(static_cast<double>(counts[j]) * inv_n);
      }
    }
  });

  StationaryRun run;
  run.k = k;
  run.population = model.population;
  run.replicate_sizes = sizes;
  run.burn_in = burn_in;
  run.thin = thin;
  run.seed = rng.seed();
  run.stream = rng.stream_id();
  run.descriptor = model.descriptor();
  for (const auto& part : parts) run.data.insert(run.data.end(), part.begin(), part.end());

  // Compare first and second halves of every replicate.
  const std::size_t d = k - 1;
  std::vector<double> m1[2], m2[2];
  double count[2] = {0.0, 0.0};
  for (int h = 0; h < 2; ++h) {
    m1[h].assign(d, 0.0);
    m2[h].assign(d, 0.0);
  }
  std::size_t offset = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t s = 0; s < sizes[r]; ++s) {
      const int h = 2 * s < sizes[r] ? 0 : 1;
      const auto w = run.sample(offset + s);
      for (std::size_t j = 0; j < d; ++j) {
        m1[h][j] += w[j];
        m2[h][j] += w[j] * w[j];
      }
      count[h] += 1.0;
    }
    offset += sizes[r];
  }
  if (count[0] > 0.0 && count[1] > 0.0) {
    for (std::size_t j = 0; j < d; ++j) {
      run.diagnostic.max_mean_drift =
          std::max(run.diagnostic.max_mean_drift, std::abs(m1[0][j] / count[0] - m1[1][j] / count[1]));
      run.diagnostic.max_second_drift = std::max(
          run.diagnostic.max_second_drift, std::abs(m2[0][j] / count[0] - m2[1][j] / count[1]));
    }
  }
  return run;
}

MeanEstimate estimate_mean(const StationaryRun& run,
                           const std::function<double(std::span<const double>)>& f,
                           std::size_t batches) {
  const std::size_t n = run.size();
  if (n == 0) fail(ErrorCode::kInvalidArgument, "empty sample");
  std::vector<double> values(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = f(run.sample(i));
    total += values[i];
  }
  MeanEstimate est;
  est.mean = total / static_cast<double>(n);

  std::vector<std::size_t> sizes = run.replicate_sizes;
  if (sizes.empty()) sizes.push_back(n);
  const std::size_t per_rep = std::max<std::size_t>(1, batches / sizes.size());
  std::vector<double> batch_means;
  std::vector<double> batch_weights;
  std::size_t offset = 0;
  for (std::size_t len : sizes) {
    const std::size_t b = std::min(per_rep, len);
    for (std::size_t q = 0; q < b; ++q) {
      const std::size_t lo = offset + q * len / b;
      const std::size_t hi = offset + (q + 1) * len / b;
      double sum = 0.0;
      for (std::size_t i = lo; i < hi; ++i) sum += values[i];
      if (hi > lo) {
        batch_means.push_back(sum / static_cast<double>(hi - lo));
        batch_weights.push_back(static_cast<double>(hi - lo));
      }
    }
    offset += len;
  }
  const std::size_t nb = batch_means.size();
  if (nb >= 2) {
    // Weighted batch-means variance of the overall mean.
    double acc = 0.0;
    for (std::size_t q = 0; q < nb; ++q) {
      const double w = batch_weights[q] / static_cast<double>(n);
      const double dev = batch_means[q] - est.mean;
      acc += w * w * dev * dev;
    }
    est.stderr_ = std::sqrt(acc * static_cast<double>(nb) / static_cast<double>(nb - 1));
  } else if (n >= 2) {
    double acc = 0.0;
    for (double v : values) acc += (v - est.mean) * (v - est.mean);
    est.stderr_ = std::sqrt(acc / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return est;
}

void write_samples_csv(const StationaryRun& run, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  const std::size_t d = run.dim();
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << "w" << (j + 1);
  out << "\n";
  for (std::size_t i = 0; i < run.size(); ++i) {
    const auto w = run.sample(i);
    for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << format_number(w[j]);
    out << "\n";
  }
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

std::string run_metadata_json(const StationaryRun& run) {
  nlohmann::ordered_json j;
  j["seed"] = run.seed;
  j["stream"] = run.stream;
  j["N"] = run.population;
  j["K"] = run.k;
  j["burn_in"] = run.burn_in;
  j["thin"] = run.thin;
  j["samples"] = run.size();
  j["replicates"] = run.replicate_sizes.size();
  j["model"] = run.descriptor;
  j["max_mean_drift"] = run.diagnostic.max_mean_drift;
  j["max_second_drift"] = run.diagnostic.max_second_drift;
  return j.dump(2);
}

double wf_conditional_second_moment(const MutationMatrix& p, int population,
                                    const SimplexPoint& w, std::size_t i, std::size_t j) {
  const auto tp = transition_probs(p, w);
  const std::size_t d = p.dim() - 1;
  if (i >= d || j >= d) fail(ErrorCode::kDimension, "moment index out of range");
  const double n = population;
  auto sigma_of = [&](std::size_t r) {
    const std::size_t last = p.dim() - 1;
    double s = p(last, r);
    for (std::size_t m = 0; m < p.dim(); ++m) {
      if (m != r) s += p(r, m);
    }
    return s;
  };
  if (i == j) {
    const double s = sigma_of(j), t = tp.t[j], x = w[j];
    return x * x * (-1.0 / n + 2.0 * s / n + s * s * (1.0 - 1.0 / n)) +
           x * (1.0 / n - 2.0 * t / n - s / n - 2.0 * t * s * (1.0 - 1.0 / n)) +
           t * (t + (1.0 - t) / n);
  }
  const double si = sigma_of(i), sj = sigma_of(j), ti = tp.t[i], tj = tp.t[j];
  const double wi = w[i], wj = w[j];
  return wi * wj * (-1.0 / n + (si + sj) / n + si * sj * (1.0 - 1.0 / n)) +
         ti * tj * (1.0 - 1.0 / n) - wi * tj * (si + (1.0 - si) / n) -
         wj * ti * (sj + (1.0 - sj) / n);
}

ConditionalMomentReport verify_conditional_moments_wf(const MutationMatrix& p, int population,
                                                      const std::vector<ChainState>& states,
                                                      RngStream& rng, std::size_t mc_steps) {
  ConditionalMomentReport report;
  const std::size_t d = p.dim() - 1;
  const double n = population;
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto& st = states[s];
    st.validate();
    if (st.population != population || st.dim() != p.dim()) {
      fail(ErrorCode::kDimension, "state " + std::to_string(s + 1) + " does not match N or K");
    }
    const auto w = st.proportions();
    const auto tp = transition_probs(p, w);

    // Monte Carlo over independent single steps from this state.
    std::vector<double> acc(d * d, 0.0), acc_sq(d * d, 0.0);
    if (mc_steps > 0) {
      const ChainModel model{population, p, std::nullopt};
      ChainStepper stepper(model);
      std::vector<std::int64_t> next(d);
      std::vector<double> delta(d);
      for (std::size_t t = 0; t < mc_steps; ++t) {
        std::copy(st.counts.begin(), st.counts.end(), next.begin());
        stepper.advance(next, rng);
        for (std::size_t a = 0; a < d; ++a) delta[a] = static_cast<double>(next[a]) / n - w[a];
        for (std::size_t a = 0; a < d; ++a) {
          for (std::size_t b = a; b < d; ++b) {
            const double v = delta[a] * delta[b];
            acc[a * d + b] += v;
            acc_sq[a * d + b] += v * v;
          }
        }
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        ConditionalMomentRow row;
        row.state = s;
        row.i = i;
        row.j = j;
        row.closed = wf_conditional_second_moment(p, population, w, i, j);
        // Factorial moments of MN(N; q): E X_i X_j = N(N-1) q_i q_j + [i==j] N q_i.
        const double cross = (n * (n - 1.0) * tp.q[i] * tp.q[j] + (i == j ? n * tp.q[i] : 0.0)) /
                             (n * n);
        row.exact = cross - w[i] * tp.q[j] - w[j] * tp.q[i] + w[i] * w[j];
        report.max_exact_residual =
            std::max(report.max_exact_residual, std::abs(row.exact - row.closed));
        if (mc_steps > 0) {
          const double m = static_cast<double>(mc_steps);
          row.mc = acc[i * d + j] / m;
          const double var = std::max(0.0, acc_sq[i * d + j] / m - row.mc * row.mc);
          row.mc_stderr = mc_steps > 1 ? std::sqrt(var / (m - 1.0)) : 0.0;
          const double diff = std::abs(row.mc - row.closed);
          if (row.mc_stderr > 0.0) {
            report.max_mc_z = std::max(report.max_mc_z, diff / row.mc_stderr);
          } else if (diff > 1e-12) {
            report.max_mc_z = std::numeric_limits<double>::infinity();
          }
        }
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

}  // namespace dirapprox
