#include "kebio/transe/transe.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include "kebio/ndmath/optim.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

void TranseConfig::validate() const {
  if (dim == 0) throw ConfigError("transe dim must be positive");
  if (epochs < 0) throw ConfigError("transe epochs must be >= 0");
  if (!(lr > 0)) throw ConfigError("transe lr must be positive");
  if (batch_size == 0) throw ConfigError("transe batch_size must be positive");
  if (!(margin > 0)) throw ConfigError("transe margin must be positive");
}

Tensor random_entity_table(std::size_t rows, std::size_t dim, Rng& rng) {
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  std::vector<real> data(rows * dim);
  for (real& v : data) v = static_cast<real>(rng.uniform(-bound, bound));
  return Tensor::from_data({rows, dim}, std::move(data));
}

TranseModel::TranseModel(std::size_t n_entities, std::size_t n_relations, std::size_t dim,
                         double margin_, Rng& rng)
    : margin(margin_) {
  entities = random_entity_table(n_entities, dim, rng);
  relations = random_entity_table(n_relations, dim, rng);
  entities.set_requires_grad(true);
  relations.set_requires_grad(true);
}

double TranseModel::score(std::size_t s, std::size_t r, std::size_t o) const {
  const std::size_t n = entities.rows(), d = dim();
  if (s >= n || o >= n || r >= relations.rows()) {
    throw DataError("transe score: index out of range (s=" + std::to_string(s) +
                    ", r=" + std::to_string(r) + ", o=" + std::to_string(o) + ")");
  }
  const auto e = entities.data();
  const auto rel = relations.data();
  double acc = 0;
  for (std::size_t j = 0; j < d; ++j) {
    const double x = double(e[s * d + j]) + rel[r * d + j] - e[o * d + j];
    acc += x * x;
  }
  return std::sqrt(acc);
}

double TranseModel::margin_loss(const TripletIds& pos, const TripletIds& neg) const {
  return std::max(0.0, margin + score(pos) - score(neg));
}

void TranseModel::normalize_entities() {
  const std::size_t d = dim();
  auto e = entities.mutable_data();
  for (std::size_t row = 0; row < entities.rows(); ++row) {
    double norm = 0;
    for (std::size_t j = 0; j < d; ++j) norm += double(e[row * d + j]) * e[row * d + j];
    norm = std::sqrt(norm);
    if (norm == 0) continue;
    for (std::size_t j = 0; j < d; ++j) e[row * d + j] = static_cast<real>(e[row * d + j] / norm);
  }
}

std::vector<TripletIds> index_triplets(const KnowledgeBase& kb) {
  std::unordered_map<std::string, std::size_t> rel_index;
  const auto names = kb.relations();
  for (std::size_t i = 0; i < names.size(); ++i) rel_index.emplace(names[i], i);
  std::vector<TripletIds> out;
  out.reserve(kb.triplets().size());
  for (const auto& t : kb.triplets()) {
    out.push_back({kb.require_index(t.subject), rel_index.at(t.relation),
                   kb.require_index(t.object)});
  }
  return out;
}

namespace {

// Adds sign * d(score)/d(.) into the grad rows of one triplet.
void accumulate(const TranseModel& m, const TripletIds& t, double sign, std::span<real> ge,
                std::span<real> gr) {
  const std::size_t d = m.dim();
  const auto e = m.entities.data();
  const auto rel = m.relations.data();
  std::vector<double> diff(d);
  double norm = 0;
  for (std::size_t j = 0; j < d; ++j) {
    diff[j] = double(e[t.subject * d + j]) + rel[t.relation * d + j] - e[t.object * d + j];
    norm += diff[j] * diff[j];
  }
  norm = std::sqrt(norm);
  if (norm == 0) return;  // subgradient 0 at the kink
  for (std::size_t j = 0; j < d; ++j) {
    const auto g = static_cast<real>(sign * diff[j] / norm);
    ge[t.subject * d + j] += g;
    gr[t.relation * d + j] += g;
    ge[t.object * d + j] -= g;
  }
}

}  // namespace

TranseModel train_transe(KnowledgeBase& kb, const TranseConfig& config,
                         const std::function<void(int, double)>& on_epoch) {
  config.validate();
  if (kb.triplets().empty()) throw UsageError("train-transe: the knowledge base has no triplets");
  const std::vector<TripletIds> triplets = index_triplets(kb);
  const std::size_t n_entities = kb.size();
  Rng rng(Rng::derive(config.seed, {0x7a5e}));
  TranseModel model(n_entities, kb.relations().size(), config.dim, config.margin, rng);
  model.normalize_entities();

  AdamW optim({{"transe.entities", model.entities, false},
               {"transe.relations", model.relations, false}},
              AdamWOptions{});
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      optim.zero_grad();
      auto ge = model.entities.mutable_grad();
      auto gr = model.relations.mutable_grad();
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const TripletIds pos = triplets[order[b]];
        TripletIds neg = pos;
        const bool corrupt_head = rng.uniform() < 0.5;
        std::size_t& slot = corrupt_head ? neg.subject : neg.object;
        if (n_entities > 1) {
          const std::size_t original = slot;
          slot = rng.below(n_entities - 1);
          if (slot >= original) ++slot;
        }
        const double loss = model.margin_loss(pos, neg);
        epoch_loss += loss;
        if (loss > 0) {
          accumulate(model, pos, inv, ge, gr);
          accumulate(model, neg, -inv, ge, gr);
        }
      }
      optim.step(config.lr);
    }
    model.normalize_entities();
    const double mean = epoch_loss / static_cast<double>(order.size());
    if (!std::isfinite(mean)) throw NumericError("train-transe: non-finite loss at epoch " + std::to_string(epoch));
    if (on_epoch) on_epoch(epoch, mean);
  }

  Tensor table = model.entities.detach();
  kb.set_embeddings(table);
  return model;
}

double tail_hits_at_1(const TranseModel& model, std::span<const TripletIds> triplets) {
  if (triplets.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : triplets) {
    const double truth = model.score(t);
    bool hit = true;
    for (std::size_t o = 0; o < model.entities.rows() && hit; ++o) {
      if (o != t.object && model.score(t.subject, t.relation, o) <= truth) hit = false;
    }
    hits += hit;
  }
  return static_cast<double>(hits) / static_cast<double>(triplets.size());
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
