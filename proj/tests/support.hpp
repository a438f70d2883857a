#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "audiolm/corpus.hpp"
#include "audiolm/scaling.hpp"
#include "audiolm/vocab.hpp"

namespace audiolm::test {

// Generating-law constants used for the synthetic sweep.
struct LossLaw {
  double E = 3.169;
  double A = 215886.0;
  double alpha = 0.684;
  double B = 4750.0;
  double beta = 0.439;

  double operator()(double n, double d) const {
    return E + A / std::pow(n, alpha) + B / std::pow(d, beta);
  }
  double n_opt(double compute) const {
    const double g = std::pow(alpha * A / (beta * B), 1.0 / (alpha + beta));
    return g * std::pow(compute / 6.0, beta / (alpha + beta));
  }
};

// 7 budgets log-spaced over [3e18, 3e20]; per budget 9 sizes log-spaced over
// 1.5 decades centred on the generating law's optimum.
inline std::vector<RunRecord> synthetic_sweep(const LossLaw& law = {}, int budgets = 7,
                                              int sizes = 9) {
  std::vector<RunRecord> runs;
  for (int i = 0; i < budgets; ++i) {
    const double c = 3e18 * std::pow(100.0, static_cast<double>(i) / (budgets - 1));
    const double centre = law.n_opt(c);
    for (int j = 0; j < sizes; ++j) {
      const double n = centre * std::pow(10.0, -0.75 + 1.5 * j / (sizes - 1));
      const double d = c / (6.0 * n);
      runs.push_back({n, d, c, law(n, d)});
    }
  }
  return runs;
}

inline Document random_document(std::mt19937_64& rng, const VocabLayout& layout,
                                const std::string& id, const std::string& source = "speech",
                                int max_utterances = 4, int max_text = 12, int max_frames = 6) {
  std::uniform_int_distribution<int> n_utt(1, max_utterances);
  std::uniform_int_distribution<int> n_text(0, max_text);
  std::uniform_int_distribution<int> n_frames(0, max_frames);
  std::uniform_int_distribution<std::uint32_t> text_id(0, layout.text_size() - 1);
  std::uniform_int_distribution<std::uint32_t> code(0, layout.codebook_size() - 1);
  Document doc{id, source, {}};
  const int utts = n_utt(rng);
  for (int u = 0; u < utts; ++u) {
    Utterance utt;
    const int t = n_text(rng);
    for (int k = 0; k < t; ++k) utt.text_ids.push_back(text_id(rng));
    const int f = n_frames(rng);
    utt.codes = CodeMatrix(static_cast<std::size_t>(f), layout.num_codebooks());
    for (int fr = 0; fr < f; ++fr) {
      for (std::uint32_t cb = 0; cb < layout.num_codebooks(); ++cb) utt.codes(fr, cb) = code(rng);
    }
    doc.utterances.push_back(std::move(utt));
  }
  return doc;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("audiolm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = file(name);
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace audiolm::test
