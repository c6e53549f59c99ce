#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sciembed/activation_io.hpp"
#include "sciembed_cli/cli.hpp"
#include "test_support.hpp"

namespace testing {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = sciembed::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Stand-in for the encoder: one document per TSV line, tokens are the
// whitespace-split words (long ones split into a "##" continuation piece)
// bracketed by [CLS]/[SEP], activations drawn from a per-pmid seed.
inline void write_fake_container(const std::filesystem::path& texts, const std::filesystem::path& out,
                                 std::size_t width, bool with_losses = false) {
  std::ifstream in(texts);
  std::vector<sciembed::ActivationMatrix> docs;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    sciembed::ActivationMatrix m;
    m.pmid = std::stoull(line.substr(0, tab));
    m.tokens.push_back("[CLS]");
    std::istringstream words(line.substr(tab + 1));
    std::string w;
    while (words >> w && m.tokens.size() < 40) {
      if (w.size() > 6) {
        m.tokens.push_back(w.substr(0, 4));
        m.tokens.push_back("##" + w.substr(4));
      } else {
        m.tokens.push_back(w);
      }
    }
    m.tokens.push_back("[SEP]");
    m.special_mask.assign(m.tokens.size(), 0);
    m.special_mask.front() = m.special_mask.back() = 1;
    std::mt19937_64 rng(m.pmid);
    m.rows = random_matrix(rng, m.tokens.size(), width, 0.5, 1.0);
    if (with_losses) {
      std::vector<float> l(m.tokens.size());
      for (auto& x : l) x = std::uniform_real_distribution<float>(0.0f, 6.0f)(rng);
      m.losses = std::move(l);
    }
    docs.push_back(std::move(m));
  }
  std::ofstream os(out, std::ios::binary);
  sciembed::write_container(docs, os);
}

}  // namespace testing
