#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace safepg {

// Finite state/action, finite-horizon MDP with an explicit transition
// kernel and a safe-state set. Small by construction: it exists to be
// enumerated exactly.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;
  int s0 = 0;
  std::vector<double> transition;  // [s][a][s'], rows sum to 1
  std::vector<unsigned char> safe;
  std::vector<double> reward_table;  // [s][a]

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) *
                          n_states +
                      s2];
  }
  double& p(int s, int a, int s2) {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) *
                          n_states +
                      s2];
  }
  double r(int s, int a) const {
    return reward_table[static_cast<std::size_t>(s) * n_actions + a];
  }
  double& r(int s, int a) {
    return reward_table[static_cast<std::size_t>(s) * n_actions + a];
  }
  bool is_safe_state(int s) const { return safe[static_cast<std::size_t>(s)] != 0; }

  void resize_tables() {
    transition.assign(
        static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    safe.assign(static_cast<std::size_t>(n_states), 1);
    reward_table.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
  }

  void normalize_rows() {
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) sum += p(s, a, s2);
        if (sum <= 0.0) {
          throw std::invalid_argument("TabularMdp: empty transition row");
        }
        for (int s2 = 0; s2 < n_states; ++s2) p(s, a, s2) /= sum;
      }
    }
  }

  void validate() const {
    if (n_states < 1 || n_actions < 1 || horizon < 1) {
      throw std::invalid_argument("TabularMdp: bad dimensions");
    }
    if (s0 < 0 || s0 >= n_states || !is_safe_state(s0)) {
      throw std::invalid_argument("TabularMdp: s0 must be a safe state");
    }
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) {
          const double v = p(s, a, s2);
          if (v < 0.0 || !std::isfinite(v)) {
            throw std::invalid_argument("TabularMdp: bad transition entry");
          }
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
          throw std::invalid_argument("TabularMdp: row does not sum to 1");
        }
      }
    }
  }
};

// Text format:
//   tabular S=<n> A=<m> T=<T> s0=<i>
//   safe <i> <j> ...
//   r <s> <a> <value>
//   p <s> <a> <s'> <prob>
// Unlisted rewards and transition entries are zero; each (s,a) transition
// row must sum to 1 within 1e-9 and is renormalized exactly on load.
inline TabularMdp parse_tabular_mdp(const std::string& text,
                                    const std::string& origin = "<string>") {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " +
                             msg);
  };

  TabularMdp mdp;
  bool have_header = false;
  bool have_safe = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "tabular") {
      if (std::sscanf(line.c_str(), "tabular S=%d A=%d T=%d s0=%d",
                      &mdp.n_states, &mdp.n_actions, &mdp.horizon,
                      &mdp.s0) != 4) {
        fail("bad header");
      }
      if (mdp.n_states < 1 || mdp.n_actions < 1 || mdp.horizon < 1) {
        fail("bad dimensions in header");
      }
      mdp.resize_tables();
      have_header = true;
    } else if (!have_header) {
      fail("expected 'tabular' header first");
    } else if (tok == "safe") {
      if (!have_safe) {
        mdp.safe.assign(static_cast<std::size_t>(mdp.n_states), 0);
        have_safe = true;
      }
      int s;
      while (ls >> s) {
        if (s < 0 || s >= mdp.n_states) fail("safe state out of range");
        mdp.safe[static_cast<std::size_t>(s)] = 1;
      }
    } else if (tok == "r") {
      int s, a;
      double v;
      if (!(ls >> s >> a >> v)) fail("bad reward line");
      if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions) {
        fail("reward index out of range");
      }
      mdp.r(s, a) = v;
    } else if (tok == "p") {
      int s, a, s2;
      double v;
      if (!(ls >> s >> a >> s2 >> v)) fail("bad transition line");
      if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions ||
          s2 < 0 || s2 >= mdp.n_states) {
        fail("transition index out of range");
      }
      if (v < 0.0 || !std::isfinite(v)) fail("bad transition probability");
      mdp.p(s, a, s2) = v;
    } else {
      fail("unknown directive '" + tok + "'");
    }
  }
  line_no = 0;
  if (!have_header) fail("missing 'tabular' header");
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) sum += mdp.p(s, a, s2);
      if (std::abs(sum - 1.0) > 1e-9) {
        throw std::runtime_error(origin + ": transition row (s=" +
                                 std::to_string(s) + ", a=" +
                                 std::to_string(a) + ") sums to " +
                                 std::to_string(sum));
      }
    }
  }
  mdp.normalize_rows();
  mdp.validate();
  return mdp;
}

inline TabularMdp load_tabular_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read mdp file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tabular_mdp(ss.str(), path);
}

inline std::string format_tabular_mdp(const TabularMdp& mdp) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "tabular S=%d A=%d T=%d s0=%d\n",
                mdp.n_states, mdp.n_actions, mdp.horizon, mdp.s0);
  out += buf;
  out += "safe";
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.is_safe_state(s)) {
      out += ' ';
      out += std::to_string(s);
    }
  }
  out += '\n';
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (mdp.r(s, a) != 0.0) {
        std::snprintf(buf, sizeof(buf), "r %d %d %.17g\n", s, a, mdp.r(s, a));
        out += buf;
      }
    }
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        if (mdp.p(s, a, s2) != 0.0) {
          std::snprintf(buf, sizeof(buf), "p %d %d %d %.17g\n", s, a, s2,
                        mdp.p(s, a, s2));
          out += buf;
        }
      }
    }
  }
  return out;
}

}  // namespace safepg
