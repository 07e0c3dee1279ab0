#include "phonerec/htsvm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "phonerec/error.hpp"
#include "phonerec/parallel.hpp"
#include "phonerec/rng.hpp"

namespace phonerec::htsvm {

namespace {

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Taxonomy Taxonomy::load(const std::filesystem::path& file,
                        const std::vector<std::string>& alphabet) {
  return parse(read_text_file(file), alphabet);
}

Taxonomy Taxonomy::parse(const std::string& text, const std::vector<std::string>& alphabet) {
  Taxonomy t;
  t.text_ = text;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream row(line);
    std::string kind;
    if (!(row >> kind)) continue;
    const auto fail = [&](const std::string& msg) {
      throw DataError("taxonomy line " + std::to_string(line_no) + ": " + msg);
    };
    std::string name;
    if (!(row >> name)) fail("missing name");
    if (!name.empty() && name.back() == ':') name.pop_back();
    else {
      std::string colon;
      if (!(row >> colon) || colon != ":") fail("expected ':' after name");
    }
    if (name.empty()) fail("empty name");
    if (t.children_.count(name) || t.leaf_phone_.count(name)) fail("duplicate name '" + name + "'");
    if (kind == "node") {
      std::vector<std::string> kids;
      std::string kid;
      while (row >> kid) kids.push_back(kid);
      if (kids.size() < 2 || kids.size() > 4) {
        fail("node '" + name + "' has " + std::to_string(kids.size()) +
             " children (2-4 allowed)");
      }
      t.children_[name] = std::move(kids);
      t.internal_order_.push_back(name);
    } else if (kind == "leaf") {
      std::string phone, extra;
      if (!(row >> phone) || (row >> extra)) fail("leaf '" + name + "' must list exactly one phone");
      t.leaf_phone_[name] = phone;
    } else {
      fail("unknown keyword '" + kind + "'");
    }
  }
  if (t.internal_order_.empty()) throw DataError("taxonomy declares no nodes");

  // every name has exactly one parent; exactly one node is never referenced
  for (const auto& [node, kids] : t.children_) {
    for (const auto& kid : kids) {
      if (!t.children_.count(kid) && !t.leaf_phone_.count(kid)) {
        throw DataError("taxonomy: undeclared child '" + kid + "' of node '" + node + "'");
      }
      auto [it, inserted] = t.parent_.emplace(kid, node);
      if (!inserted) {
        throw DataError("taxonomy: '" + kid + "' is a child of both '" + it->second +
                        "' and '" + node + "'");
      }
    }
  }
  for (const auto& [node, kids] : t.children_) {
    if (!t.parent_.count(node)) {
      if (!t.root_.empty()) {
        throw DataError("taxonomy: multiple roots ('" + t.root_ + "', '" + node + "')");
      }
      t.root_ = node;
    }
  }
  if (t.root_.empty()) throw DataError("taxonomy: no root (cycle among nodes)");
  for (const auto& [leaf, phone] : t.leaf_phone_) {
    if (!t.parent_.count(leaf)) throw DataError("taxonomy: leaf '" + leaf + "' is unreachable");
  }

  // reachability from the root covers everything (no disconnected cycles)
  std::set<std::string> seen;
  std::vector<std::string> stack{t.root_};
  while (!stack.empty()) {
    const std::string name = stack.back();
    stack.pop_back();
    if (!seen.insert(name).second) {
      throw DataError("taxonomy: cycle involving '" + name + "'");
    }
    auto it = t.children_.find(name);
    if (it != t.children_.end()) {
      for (const auto& kid : it->second) stack.push_back(kid);
    }
  }
  if (seen.size() != t.children_.size() + t.leaf_phone_.size()) {
    throw DataError("taxonomy: unreachable nodes present");
  }

  // leaves partition the alphabet
  for (const auto& [leaf, phone] : t.leaf_phone_) {
    auto [it, inserted] = t.leaf_of_phone_.emplace(phone, leaf);
    if (!inserted) {
      throw DataError("taxonomy: phone '" + phone + "' appears in leaves '" + it->second +
                      "' and '" + leaf + "'");
    }
  }
  const std::set<std::string> alpha(alphabet.begin(), alphabet.end());
  for (const auto& [phone, leaf] : t.leaf_of_phone_) {
    if (!alpha.count(phone)) {
      throw DataError("taxonomy: phone '" + phone + "' is not in the alphabet");
    }
  }
  for (const auto& phone : alpha) {
    if (!t.leaf_of_phone_.count(phone)) {
      throw DataError("taxonomy: phone '" + phone + "' missing from every leaf");
    }
  }

  // subtree phone sets, bottom-up via recursion
  struct Builder {
    Taxonomy& t;
    const std::vector<std::string>& collect(const std::string& name) {
      auto found = t.subtree_.find(name);
      if (found != t.subtree_.end()) return found->second;
      std::vector<std::string> phones;
      if (t.is_leaf(name)) {
        phones.push_back(t.leaf_phone_.at(name));
      } else {
        for (const auto& kid : t.children_.at(name)) {
          const auto& sub = collect(kid);
          phones.insert(phones.end(), sub.begin(), sub.end());
        }
        std::sort(phones.begin(), phones.end());
      }
      return t.subtree_[name] = std::move(phones);
    }
  };
  Builder{t}.collect(t.root_);
  return t;
}

const std::vector<std::string>& Taxonomy::children(const std::string& name) const {
  auto it = children_.find(name);
  if (it == children_.end()) throw DataError("taxonomy: '" + name + "' is not an internal node");
  return it->second;
}

const std::string& Taxonomy::leaf_phone(const std::string& leaf) const {
  auto it = leaf_phone_.find(leaf);
  if (it == leaf_phone_.end()) throw DataError("taxonomy: '" + leaf + "' is not a leaf");
  return it->second;
}

const std::string& Taxonomy::broad_class(const std::string& phone) const {
  return child_towards(root_, phone);
}

const std::string& Taxonomy::child_towards(const std::string& node, const std::string& phone) const {
  for (const auto& kid : children(node)) {
    const auto& phones = subtree_phones(kid);
    if (std::binary_search(phones.begin(), phones.end(), phone)) return kid;
  }
  throw DataError("taxonomy: phone '" + phone + "' is not under node '" + node + "'");
}

const std::vector<std::string>& Taxonomy::subtree_phones(const std::string& name) const {
  auto it = subtree_.find(name);
  if (it == subtree_.end()) throw DataError("taxonomy: unknown name '" + name + "'");
  return it->second;
}

Matrix smote(const Matrix& minority, int k, std::size_t n_new, std::uint64_t seed) {
  if (minority.rows() < 2) throw DataError("smote needs at least 2 minority rows");
  if (k < 1) throw DataError("smote needs k >= 1");
  const std::size_t n = minority.rows(), d = minority.cols();
  const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);

  // k nearest neighbors inside the minority class, ties to the lower index
  std::vector<std::vector<std::size_t>> neighbors(n);
  parallel_for(n, [&](std::size_t r) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(n - 1);
    for (std::size_t t = 0; t < n; ++t) {
      if (t == r) continue;
      double d2 = 0.0;
      const double* a = minority.row(r);
      const double* b = minority.row(t);
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        d2 += diff * diff;
      }
      dist.emplace_back(d2, t);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_eff), dist.end());
    neighbors[r].reserve(k_eff);
    for (std::size_t i = 0; i < k_eff; ++i) neighbors[r].push_back(dist[i].second);
  });

  Rng rng(seed);
  Matrix out(n_new, d);
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t r = static_cast<std::size_t>(rng.below(n));
    const std::size_t nn = neighbors[r][static_cast<std::size_t>(rng.below(k_eff))];
    const double lambda = rng.uniform01();
    const double* a = minority.row(r);
    const double* b = minority.row(nn);
    double* dst = out.row(s);
    for (std::size_t i = 0; i < d; ++i) dst[i] = a[i] + lambda * (b[i] - a[i]);
  }
  return out;
}

std::map<std::string, std::size_t> synthetics_needed(
    const std::map<std::string, std::size_t>& class_counts) {
  std::size_t majority = 0;
  for (const auto& [name, count] : class_counts) majority = std::max(majority, count);
  std::map<std::string, std::size_t> needed;
  for (const auto& [name, count] : class_counts) needed[name] = majority - count;
  return needed;
}

std::map<std::string, Matrix> balance_node(const std::map<std::string, Matrix>& per_class,
                                           const SmoteConfig& cfg) {
  if (per_class.size() < 2) throw DataError("balance_node needs at least two classes");
  std::map<std::string, std::size_t> counts;
  for (const auto& [name, rows] : per_class) {
    if (rows.rows() == 0) throw DataError("class '" + name + "' has no samples");
    counts[name] = rows.rows();
  }
  const auto needed = synthetics_needed(counts);

  std::map<std::string, Matrix> balanced;
  for (const auto& [name, rows] : per_class) {
    Matrix out = rows;
    const std::size_t n_new = needed.at(name);
    if (n_new > 0) {
      if (rows.rows() >= 2) {
        const Matrix synth =
            smote(rows, cfg.k_neighbors, n_new, derive_seed(cfg.seed, "smote." + name));
        for (std::size_t r = 0; r < synth.rows(); ++r) out.append_row(synth.row(r));
      } else {
        warn("class '" + name + "' has a single sample; duplicating instead of SMOTE");
        for (std::size_t r = 0; r < n_new; ++r) out.append_row(rows.row(0));
      }
    }
    balanced[name] = std::move(out);
  }
  return balanced;
}

Standardizer Standardizer::fit(const Matrix& X) {
  if (X.rows() == 0) throw DataError("cannot standardize an empty matrix");
  const std::size_t n = X.rows(), d = X.cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  parallel_for(d, [&](std::size_t j) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += X(r, j);
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double diff = X(r, j) - mean;
      var += diff * diff;
    }
    var /= static_cast<double>(n);
    s.mean[j] = mean;
    s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  });
  return s;
}

void Standardizer::apply(Matrix& X) const {
  if (X.cols() != mean.size()) throw DataError("standardizer dimension mismatch");
  parallel_for(X.rows(), [&](std::size_t r) {
    double* row = X.row(r);
    for (std::size_t j = 0; j < mean.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
  });
}

std::vector<double> Standardizer::transform(std::span<const double> x) const {
  if (x.size() != mean.size()) throw DataError("standardizer dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

namespace {

svm::NodeModel train_balanced_node(const std::map<std::string, Matrix>& per_class,
                                   const std::vector<std::string>& classes,
                                   const HtsvmConfig& cfg, std::uint64_t smote_seed) {
  SmoteConfig smote_cfg = cfg.smote;
  smote_cfg.seed = smote_seed;
  const auto balanced = balance_node(per_class, smote_cfg);

  std::size_t total = 0, dim = 0;
  for (const auto& [name, rows] : balanced) {
    total += rows.rows();
    dim = rows.cols();
  }
  Matrix X(0, dim);
  std::vector<int> labels;
  labels.reserve(total);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto it = balanced.find(classes[c]);
    if (it == balanced.end()) throw DataError("class '" + classes[c] + "' has no samples");
    for (std::size_t r = 0; r < it->second.rows(); ++r) {
      X.append_row(it->second.row(r));
      labels.push_back(static_cast<int>(c));
    }
  }
  return svm::node_train(X, labels, classes, cfg.C, cfg.kernel, cfg.smo);
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> ensemble_chunks(std::size_t n, int members) {
  if (members < 1) throw DataError("ensemble needs at least one member");
  const std::size_t chunk = n / static_cast<std::size_t>(members);
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  for (int m = 0; m < members; ++m) {
    const std::size_t lo = static_cast<std::size_t>(m) * chunk;
    const std::size_t hi = m + 1 == members ? n : (static_cast<std::size_t>(m) + 1) * chunk;
    bounds.emplace_back(lo, hi);
  }
  return bounds;
}

std::vector<svm::NodeModel> train_root_ensemble(const Matrix& features,
                                                const std::vector<std::string>& broad_labels,
                                                const Taxonomy& taxonomy,
                                                const HtsvmConfig& cfg) {
  const std::size_t n = features.rows();
  if (broad_labels.size() != n) throw DataError("label count does not match row count");
  const int members = cfg.ensemble_members;
  const auto& classes = taxonomy.children(taxonomy.root());
  std::map<std::string, std::size_t> counts;
  for (const auto& label : broad_labels) counts[label]++;
  for (const auto& cls : classes) {
    if (counts[cls] < static_cast<std::size_t>(members)) {
      throw DataError("root ensemble needs at least " + std::to_string(members) +
                      " samples of class '" + cls + "', got " + std::to_string(counts[cls]));
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, "root.shuffle"));
  rng.shuffle(order);

  const auto chunks = ensemble_chunks(n, members);
  std::vector<svm::NodeModel> ensemble(static_cast<std::size_t>(members));
  parallel_for_dynamic(static_cast<std::size_t>(members), [&](std::size_t m) {
    const auto [lo, hi] = chunks[m];
    std::map<std::string, Matrix> per_class;
    for (const auto& cls : classes) per_class.emplace(cls, Matrix(0, features.cols()));
    for (std::size_t i = lo; i < hi; ++i) {
      per_class[broad_labels[order[i]]].append_row(features.row(order[i]));
    }
    for (const auto& [cls, rows] : per_class) {
      if (rows.rows() == 0) {
        throw DataError("root ensemble chunk " + std::to_string(m) + " has no samples of '" +
                        cls + "'");
      }
    }
    ensemble[m] = train_balanced_node(per_class, classes, cfg,
                                      derive_seed(cfg.seed, "root.chunk." + std::to_string(m)));
  });
  return ensemble;
}

const std::string& root_vote(const std::vector<std::string>& member_predictions,
                             const Taxonomy& taxonomy) {
  const auto& classes = taxonomy.children(taxonomy.root());
  std::vector<int> votes(classes.size(), 0);
  for (const auto& p : member_predictions) {
    const auto it = std::find(classes.begin(), classes.end(), p);
    if (it == classes.end()) throw DataError("root_vote: '" + p + "' is not a root child");
    votes[static_cast<std::size_t>(it - classes.begin())]++;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return classes[best];
}

HtsvmModel train_tree(const Matrix& features, const std::vector<std::string>& phone_labels,
                      const Taxonomy& taxonomy, const HtsvmConfig& cfg) {
  const std::size_t n = features.rows();
  if (phone_labels.size() != n) throw DataError("label count does not match row count");
  if (n == 0) throw DataError("no training features");

  std::map<std::string, std::size_t> phone_counts;
  for (const auto& phone : phone_labels) {
    taxonomy.broad_class(phone);  // validates the phone is in the tree
    phone_counts[phone]++;
  }
  for (const auto& [phone, count] : phone_counts) {
    if (count < 2) {
      warn("phone '" + phone + "' has only " + std::to_string(count) +
           " training frame(s); SMOTE will fall back to duplication");
    }
  }
  // every child subtree of every internal node must be populated
  for (const auto& node : taxonomy.internal_nodes()) {
    for (const auto& kid : taxonomy.children(node)) {
      std::size_t rows = 0;
      for (const auto& phone : taxonomy.subtree_phones(kid)) {
        auto it = phone_counts.find(phone);
        if (it != phone_counts.end()) rows += it->second;
      }
      if (rows == 0) throw DataError("no training frames in subtree '" + kid + "'");
    }
  }

  HtsvmModel model;
  model.taxonomy = taxonomy;
  model.feature_dim = static_cast<int>(features.cols());
  model.standardization = Standardizer::fit(features);
  Matrix standardized = features;
  model.standardization.apply(standardized);

  std::vector<std::string> broad(n);
  for (std::size_t i = 0; i < n; ++i) broad[i] = taxonomy.broad_class(phone_labels[i]);
  model.root_ensemble = train_root_ensemble(standardized, broad, taxonomy, cfg);

  std::vector<std::string> nodes;
  for (const auto& name : taxonomy.internal_nodes()) {
    if (name != taxonomy.root()) nodes.push_back(name);
  }
  std::vector<svm::NodeModel> trained(nodes.size());
  parallel_for_dynamic(nodes.size(), [&](std::size_t v) {
    const std::string& name = nodes[v];
    const auto& classes = taxonomy.children(name);
    const auto& phones = taxonomy.subtree_phones(name);
    std::map<std::string, Matrix> per_class;
    for (const auto& cls : classes) per_class.emplace(cls, Matrix(0, features.cols()));
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::binary_search(phones.begin(), phones.end(), phone_labels[i])) continue;
      per_class[taxonomy.child_towards(name, phone_labels[i])].append_row(standardized.row(i));
    }
    trained[v] = train_balanced_node(per_class, classes, cfg, derive_seed(cfg.seed, "node." + name));
  });
  for (std::size_t v = 0; v < nodes.size(); ++v) model.node_models[nodes[v]] = std::move(trained[v]);
  return model;
}

std::string descend_from(const HtsvmModel& model, const std::string& node_name,
                         std::span<const double> standardized_feature) {
  std::string current = node_name;
  while (!model.taxonomy.is_leaf(current)) {
    auto it = model.node_models.find(current);
    if (it == model.node_models.end()) {
      throw DataError("no trained classifier for node '" + current + "'");
    }
    current = svm::node_predict(it->second, standardized_feature);
  }
  return model.taxonomy.leaf_phone(current);
}

std::string predict(const HtsvmModel& model, std::span<const double> feature) {
  if (feature.size() != static_cast<std::size_t>(model.feature_dim)) {
    throw DataError("feature dimension " + std::to_string(feature.size()) +
                    " does not match model dimension " + std::to_string(model.feature_dim));
  }
  const std::vector<double> z = model.standardization.transform(feature);
  std::vector<std::string> member_votes;
  member_votes.reserve(model.root_ensemble.size());
  for (const auto& member : model.root_ensemble) {
    member_votes.push_back(svm::node_predict(member, z));
  }
  const std::string& broad = root_vote(member_votes, model.taxonomy);
  return descend_from(model, broad, z);
}

namespace {

template <bool Parallel>
std::vector<std::string> predict_batch_impl(const HtsvmModel& model, const Matrix& features) {
  std::vector<std::string> out(features.rows());
  auto eval = [&](std::size_t r) { out[r] = predict(model, {features.row(r), features.cols()}); };
  if constexpr (Parallel) {
    parallel_for(features.rows(), eval);
  } else {
    for (std::size_t r = 0; r < features.rows(); ++r) eval(r);
  }
  return out;
}

}  // namespace

std::vector<std::string> predict_batch(const HtsvmModel& model, const Matrix& features) {
  return predict_batch_impl<true>(model, features);
}

std::vector<std::string> predict_batch_serial(const HtsvmModel& model, const Matrix& features) {
  return predict_batch_impl<false>(model, features);
}

}  // namespace phonerec::htsvm
