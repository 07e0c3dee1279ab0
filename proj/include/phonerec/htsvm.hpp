#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "phonerec/matrix.hpp"
#include "phonerec/svm.hpp"

namespace phonerec::htsvm {

// Articulatory class tree loaded from a config file. Internal nodes have 2-4
// children; each leaf names exactly one phone; the leaves partition the
// alphabet. The tree is data, not code.
class Taxonomy {
 public:
  Taxonomy() = default;
  static Taxonomy load(const std::filesystem::path& file,
                       const std::vector<std::string>& alphabet);
  static Taxonomy parse(const std::string& text, const std::vector<std::string>& alphabet);

  const std::string& root() const { return root_; }
  bool is_leaf(const std::string& name) const { return leaf_phone_.count(name) != 0; }
  const std::vector<std::string>& children(const std::string& name) const;
  const std::string& leaf_phone(const std::string& leaf) const;
  // Internal node names in declaration order; the root comes wherever it was
  // declared.
  const std::vector<std::string>& internal_nodes() const { return internal_order_; }
  // Root child whose subtree contains the phone.
  const std::string& broad_class(const std::string& phone) const;
  // Child of `node` whose subtree contains the phone.
  const std::string& child_towards(const std::string& node, const std::string& phone) const;
  const std::vector<std::string>& subtree_phones(const std::string& name) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::string root_;
  std::map<std::string, std::vector<std::string>> children_;
  std::map<std::string, std::string> leaf_phone_;
  std::map<std::string, std::string> leaf_of_phone_;
  std::map<std::string, std::string> parent_;
  std::map<std::string, std::vector<std::string>> subtree_;  // node -> sorted phones
  std::vector<std::string> internal_order_;
};

struct SmoteConfig {
  int k_neighbors = 5;
  std::uint64_t seed = 0;
  // target is always match-majority
};

// Synthetic minority rows: x + lambda * (nn - x) with a uniformly chosen
// minority row, one of its k nearest minority neighbors, lambda ~ U[0,1).
Matrix smote(const Matrix& minority, int k, std::size_t n_new, std::uint64_t seed);

// How many synthetic rows each class needs to match the majority count.
std::map<std::string, std::size_t> synthetics_needed(
    const std::map<std::string, std::size_t>& class_counts);

// Oversamples every class up to the majority count. Originals are preserved
// and synthetics appended; a single-row class falls back to duplication with
// a warning.
std::map<std::string, Matrix> balance_node(const std::map<std::string, Matrix>& per_class,
                                           const SmoteConfig& cfg);

// Per-dimension zero-mean unit-variance transform; statistics come from the
// training features only and ship with the model.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& X);
  void apply(Matrix& X) const;
  std::vector<double> transform(std::span<const double> x) const;
};

struct HtsvmConfig {
  double C = 10000.0;
  svm::KernelParams kernel;
  svm::SmoSettings smo;
  SmoteConfig smote;
  std::uint64_t seed = 1;
  int ensemble_members = 5;
};

struct HtsvmModel {
  Taxonomy taxonomy;
  std::vector<svm::NodeModel> root_ensemble;
  std::map<std::string, svm::NodeModel> node_models;  // internal non-root nodes
  Standardizer standardization;
  int feature_dim = 0;
};

// Chunk boundaries for the root ensemble split: equal contiguous chunks with
// the remainder folded into the last one.
std::vector<std::pair<std::size_t, std::size_t>> ensemble_chunks(std::size_t n, int members);

// Root layer: one seeded shuffle, equal contiguous chunks (remainder to the
// last), each chunk SMOTE-balanced and trained over the root's child classes.
std::vector<svm::NodeModel> train_root_ensemble(const Matrix& features,
                                                const std::vector<std::string>& broad_labels,
                                                const Taxonomy& taxonomy,
                                                const HtsvmConfig& cfg);

// Mode of the member predictions; ties go to the earliest root child.
const std::string& root_vote(const std::vector<std::string>& member_predictions,
                             const Taxonomy& taxonomy);

// Full tree: fits the standardizer, trains the root ensemble on broad labels
// and every internal node on its subtree's frames, SMOTE-balanced per node.
HtsvmModel train_tree(const Matrix& features, const std::vector<std::string>& phone_labels,
                      const Taxonomy& taxonomy, const HtsvmConfig& cfg);

// Routes one raw feature vector through the tree; always returns a leaf phone.
std::string predict(const HtsvmModel& model, std::span<const double> feature);
std::vector<std::string> predict_batch(const HtsvmModel& model, const Matrix& features);
std::vector<std::string> predict_batch_serial(const HtsvmModel& model, const Matrix& features);

// Descends from a given node (e.g. a known-correct broad class) to a leaf.
// The feature must already be standardized.
std::string descend_from(const HtsvmModel& model, const std::string& node_name,
                         std::span<const double> standardized_feature);

}  // namespace phonerec::htsvm
