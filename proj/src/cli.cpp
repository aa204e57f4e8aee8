#include "memplan/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "memplan/errors.hpp"
#include "memplan/presets.hpp"

namespace memplan {

namespace {

nlohmann::ordered_json config_json(const PlanConfig& c) {
  nlohmann::ordered_json j;
  j["s_chunk"] = c.s_chunk;
  j["n_chunk"] = c.n_chunk;
  j["n_persist"] = c.n_persist;
  j["n_buffer"] = c.n_buffer;
  j["n_block"] = c.n_block;
  j["n_interval"] = c.n_interval;
  j["n_swap"] = c.n_swap;
  j["n_checkpoint"] = c.n_checkpoint;
  return j;
}

PlanConfig config_from_json(const nlohmann::json& j) {
  PlanConfig c;
  c.s_chunk = j.at("s_chunk").get<std::int64_t>();
  c.n_chunk = j.at("n_chunk").get<int>();
  c.n_persist = j.at("n_persist").get<int>();
  c.n_buffer = j.at("n_buffer").get<int>();
  c.n_block = j.at("n_block").get<int>();
  c.n_interval = j.at("n_interval").get<int>();
  c.n_swap = j.at("n_swap").get<int>();
  c.n_checkpoint = j.at("n_checkpoint").get<int>();
  c.validate();
  return c;
}

nlohmann::ordered_json estimate_json(const CostEstimate& e) {
  nlohmann::ordered_json j;
  j["t_fwd"] = e.t_fwd;
  j["t_bwd"] = e.t_bwd;
  j["t_gpu_optim"] = e.t_gpu_optim;
  j["t_cpu_optim"] = e.t_cpu_optim;
  j["t_iter"] = e.t_iter;
  j["m_peak"] = e.m_peak;
  j["m_peak_before_alpha"] = e.m_peak_before_alpha;
  return j;
}

ModelTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedTrace("cannot open trace file: " + path);
  return load_trace(in);
}

HardwareProfile resolve_hardware(const std::string& name_or_path) {
  try {
    return get_hardware(name_or_path);
  } catch (const UnknownPreset&) {
  }
  // fall back to a profile file, optionally under MEMPLAN_PRESET_DIR
  std::ifstream in(name_or_path);
  if (!in) {
    if (const char* dir = std::getenv("MEMPLAN_PRESET_DIR")) {
      in.open(std::string(dir) + "/" + name_or_path + ".json");
    }
  }
  if (!in)
    throw UnknownPreset("'" + name_or_path +
                        "' is neither a hardware preset nor a readable file");
  return load_profile(in);
}

void write_output(const std::string& path, const std::string& content,
                  std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error("IoError", "cannot open output file: " + path);
  f << content;
}

std::vector<std::int64_t> parse_grid(const std::string& s) {
  std::vector<std::int64_t> grid;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    double mult = 1;
    if (tok.size() > 2 && tok.substr(tok.size() - 2) == "Mi") {
      mult = 1 << 20;
      tok = tok.substr(0, tok.size() - 2);
    } else if (tok.size() > 2 && tok.substr(tok.size() - 2) == "Gi") {
      mult = 1 << 30;
      tok = tok.substr(0, tok.size() - 2);
    }
    grid.push_back(static_cast<std::int64_t>(std::stod(tok) * mult));
  }
  return grid;
}

// Field-by-field overrides applied on top of a named preset or profile file.
struct HwOverrides {
  std::optional<double> h2d_bw, d2h_bw, coll_bw, coll_alpha;
  std::optional<double> cpu_optim_rate, gpu_optim_rate;
  std::optional<std::int64_t> gpu_mem, cpu_mem;
  std::optional<int> world_size;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--h2d-bw", h2d_bw, "override H2D bandwidth, B/s");
    cmd->add_option("--d2h-bw", d2h_bw, "override D2H bandwidth, B/s");
    cmd->add_option("--coll-bw", coll_bw, "override collective bandwidth, B/s");
    cmd->add_option("--coll-alpha", coll_alpha, "override collective latency, s");
    cmd->add_option("--cpu-optim-rate", cpu_optim_rate,
                    "override CPU optimizer rate, params/s");
    cmd->add_option("--gpu-optim-rate", gpu_optim_rate,
                    "override GPU optimizer rate, params/s");
    cmd->add_option("--gpu-mem", gpu_mem, "override device memory, bytes");
    cmd->add_option("--cpu-mem", cpu_mem, "override host memory, bytes");
    cmd->add_option("--world-size", world_size, "override data-parallel ranks");
  }

  HardwareProfile apply(HardwareProfile hw) const {
    if (h2d_bw) hw.h2d_bw = *h2d_bw;
    if (d2h_bw) hw.d2h_bw = *d2h_bw;
    if (coll_bw) hw.coll_bw = *coll_bw;
    if (coll_alpha) hw.coll_alpha = *coll_alpha;
    if (cpu_optim_rate) hw.cpu_optim_rate = *cpu_optim_rate;
    if (gpu_optim_rate) hw.gpu_optim_rate = *gpu_optim_rate;
    if (gpu_mem) hw.gpu_mem = *gpu_mem;
    if (cpu_mem) hw.cpu_mem = *cpu_mem;
    if (world_size) hw.world_size = *world_size;
    hw.validate();
    return hw;
  }
};

struct Range {
  int lo = 0, hi = -1;  // hi < lo means "unset"
};

Range parse_range(const std::string& s) {
  Range r;
  auto colon = s.find(':');
  if (colon == std::string::npos) {
    r.lo = r.hi = std::stoi(s);
  } else {
    r.lo = std::stoi(s.substr(0, colon));
    r.hi = std::stoi(s.substr(colon + 1));
  }
  return r;
}

// Shared trace+layout loading for the planning verbs.
struct Workspace {
  ModelTrace trace;
  ChunkLayout layout;
  std::int64_t s_chunk = 0;
};

Workspace open_workspace(const std::string& trace_path, std::int64_t s_chunk) {
  Workspace w;
  w.trace = read_trace(trace_path);
  if (s_chunk > 0) {
    w.s_chunk = s_chunk;
    w.layout = pack_chunks(w.trace, s_chunk);
  } else {
    std::tie(w.s_chunk, w.layout) =
        chunk_size_search(w.trace, default_size_grid(w.trace));
  }
  return w;
}

PlanConfig resolve_config(const Workspace& w, const HardwareProfile& hw,
                          const std::string& plan_path, int np, int nb, int ns,
                          int nc) {
  if (!plan_path.empty()) {
    std::ifstream in(plan_path);
    if (!in) throw MalformedTrace("cannot open plan file: " + plan_path);
    return plan_config_from_json(in);
  }
  PlanConfig c;
  c.s_chunk = w.s_chunk;
  c.n_chunk = w.layout.n_chunk();
  c.n_block = w.trace.n_blocks;
  c.n_interval = compute_interval(w.trace, hw);
  c.n_persist = np < 0 ? c.n_chunk : np;
  c.n_buffer = nb < 0 ? (c.n_persist < c.n_chunk
                             ? std::min(3, c.n_chunk - c.n_persist)
                             : 0)
                      : nb;
  c.n_swap = std::max(0, ns);
  c.n_checkpoint = std::max(0, nc);
  c.validate();
  return c;
}

}  // namespace

std::string plan_to_json(const PlanConfig& config, const ChunkLayout& layout,
                         const BlockSchedule& schedule,
                         const SearchOutcome* outcome) {
  nlohmann::ordered_json j;
  j["config"] = config_json(config);
  j["chunks"] = nlohmann::ordered_json::array();
  for (const auto& c : layout.chunks) {
    nlohmann::ordered_json jc;
    jc["chunk_id"] = c.chunk_id;
    jc["used_bytes"] = c.used_bytes;
    jc["first_op"] = c.first_op;
    jc["last_op"] = c.last_op;
    jc["block_ids"] = c.block_ids;
    j["chunks"].push_back(std::move(jc));
  }
  j["waste_bytes"] = layout.waste_bytes;
  j["strategies"] = nlohmann::ordered_json::array();
  for (auto s : schedule.strategies) j["strategies"].push_back(to_string(s));
  if (outcome) {
    j["estimate"] = estimate_json(outcome->estimate);
    j["search"] = {{"n_evaluated", outcome->n_evaluated},
                   {"n_pruned", outcome->n_pruned}};
    j["frontier"] = nlohmann::ordered_json::array();
    for (const auto& [cfg, t] : outcome->frontier) {
      nlohmann::ordered_json row = config_json(cfg);
      row["t_iter"] = t;
      j["frontier"].push_back(std::move(row));
    }
  }
  return j.dump(2) + "\n";
}

PlanConfig plan_config_from_json(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("plan parse failure: ") + e.what());
  }
  try {
    return config_from_json(j.contains("config") ? j.at("config") : j);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("plan field error: ") + e.what());
  }
}

std::string estimate_to_json(const CostEstimate& est) {
  return estimate_json(est).dump(2) + "\n";
}

std::string simulation_to_json(const SimulationResult& r) {
  nlohmann::ordered_json j;
  j["t_iter"] = r.t_iter;
  j["t_fwd"] = r.t_fwd;
  j["t_bwd"] = r.t_bwd;
  j["t_cpu_optim_span"] = r.t_cpu_optim_span;
  j["m_peak"] = r.m_peak;
  j["n_events"] = r.timeline.size();
  return j.dump(2) + "\n";
}

std::vector<PlanConfig> sample_feasible_configs(const ModelTrace& trace,
                                                const ChunkLayout& layout,
                                                const HardwareProfile& hw,
                                                int n_samples,
                                                unsigned long long seed,
                                                const CostOptions& opts) {
  auto candidates = enumerate_candidates(layout, trace, hw, opts);
  std::vector<PlanConfig> feasible;
  for (const auto& c : candidates) {
    const auto sched =
        build_block_schedule(c.n_block, c.n_swap, c.n_checkpoint, c.n_interval);
    const auto mem = estimate_peak_memory(trace, sched, c, hw, opts);
    if (config_feasible(trace, c, mem.total, hw)) feasible.push_back(c);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < feasible.size(); ++i) {
    const std::size_t j = i + rng() % (feasible.size() - i);
    std::swap(feasible[i], feasible[j]);
  }
  if (static_cast<int>(feasible.size()) > n_samples) feasible.resize(n_samples);
  return feasible;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"memplan: memory-management planning for LLM training"};
  app.require_subcommand(1);

  // gen-trace ---------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-trace", "synthesize an iteration trace");
  std::string gen_model, gen_spec, gen_out;
  int gen_batch = -1, gen_seq = -1;
  CalibrationConstants calib;
  gen->add_option("--model", gen_model, "model preset name");
  gen->add_option("--spec", gen_spec, "model spec JSON file");
  gen->add_option("--batch", gen_batch, "per-rank batch size");
  gen->add_option("--seq", gen_seq, "sequence length");
  gen->add_option("--flops", calib.flops_per_second, "effective FLOP/s");
  gen->add_option("--act-coeff", calib.act_coeff, "activation scale");
  gen->add_option("--spike-frac", calib.temp_spike_frac, "transient spike fraction");
  gen->add_option("--residual", calib.residual_bytes, "residual floor bytes");
  gen->add_option("-o,--out", gen_out, "output path (default stdout)");

  // pack --------------------------------------------------------------------
  auto* pack = app.add_subcommand("pack", "chunk-size search and packing");
  std::string pack_trace, pack_grid, pack_out;
  pack->add_option("--trace", pack_trace, "trace file")->required();
  pack->add_option("--grid", pack_grid, "comma list of sizes (supports Mi/Gi)");
  pack->add_option("-o,--out", pack_out, "output path");

  // plan ----------------------------------------------------------------
  auto* plan = app.add_subcommand("plan", "search the optimal configuration");
  std::string plan_trace, plan_hw, plan_out;
  double plan_alpha = 1.05;
  std::int64_t plan_schunk = 0;
  plan->add_option("--trace", plan_trace, "trace file")->required();
  plan->add_option("--hw", plan_hw, "hardware preset or profile file")->required();
  plan->add_option("--alpha", plan_alpha, "fragmentation factor");
  plan->add_option("--s-chunk", plan_schunk, "override chunk size in bytes");
  plan->add_option("-o,--out", plan_out, "output path");

  // estimate / simulate -------------------------------------------------
  std::string est_trace, est_hw, est_plan, est_out;
  double est_alpha = 1.05;
  std::int64_t est_schunk = 0;
  int est_np = -1, est_nb = -1, est_ns = 0, est_nc = 0;
  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--trace", est_trace, "trace file")->required();
    cmd->add_option("--hw", est_hw, "hardware preset or profile file")->required();
    cmd->add_option("--plan", est_plan, "plan file from `plan`");
    cmd->add_option("--alpha", est_alpha, "fragmentation factor");
    cmd->add_option("--s-chunk", est_schunk, "chunk size in bytes");
    cmd->add_option("--n-persist", est_np, "persistent chunk count");
    cmd->add_option("--n-buffer", est_nb, "chunk buffer count");
    cmd->add_option("--n-swap", est_ns, "swapping block count");
    cmd->add_option("--n-checkpoint", est_nc, "checkpointing block count");
    cmd->add_option("-o,--out", est_out, "output path");
  };
  auto* est = app.add_subcommand("estimate", "analytic cost estimate");
  add_config_opts(est);
  auto* sim = app.add_subcommand("simulate", "event-driven simulation");
  add_config_opts(sim);
  std::string sim_timeline, sim_timeline_csv, sim_memtrace;
  sim->add_option("--timeline", sim_timeline, "Chrome-trace JSON output");
  sim->add_option("--timeline-csv", sim_timeline_csv, "event log CSV output");
  sim->add_option("--mem-trace", sim_memtrace, "memory trace CSV output");

  // validate ----------------------------------------------------------------
  auto* val = app.add_subcommand("validate", "estimate vs. simulation sweep");
  std::string val_trace, val_hw, val_out;
  int val_samples = 50;
  unsigned long long val_seed = 0;
  double val_alpha = 1.05;
  std::int64_t val_schunk = 0;
  val->add_option("--trace", val_trace, "trace file")->required();
  val->add_option("--hw", val_hw, "hardware preset or profile file")->required();
  val->add_option("--samples", val_samples, "number of sampled configs");
  val->add_option("--seed", val_seed, "sampling seed");
  val->add_option("--alpha", val_alpha, "fragmentation factor");
  val->add_option("--s-chunk", val_schunk, "chunk size in bytes");
  val->add_option("-o,--out", val_out, "CSV output path");

  // sweep -------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "estimate over config ranges");
  std::string sw_trace, sw_hw, sw_out;
  std::string sw_np = "0:-1", sw_nb = "-1:-1", sw_ns = "0:0", sw_nc = "0:0";
  double sw_alpha = 1.05;
  std::int64_t sw_schunk = 0;
  sweep->add_option("--trace", sw_trace, "trace file")->required();
  sweep->add_option("--hw", sw_hw, "hardware preset or profile file")->required();
  sweep->add_option("--n-persist", sw_np, "range lo:hi");
  sweep->add_option("--n-buffer", sw_nb, "range lo:hi (-1 = minimum legal)");
  sweep->add_option("--n-swap", sw_ns, "range lo:hi");
  sweep->add_option("--n-checkpoint", sw_nc, "range lo:hi");
  sweep->add_option("--alpha", sw_alpha, "fragmentation factor");
  sweep->add_option("--s-chunk", sw_schunk, "chunk size in bytes");
  sweep->add_option("-o,--out", sw_out, "CSV output path");

  auto* lp = app.add_subcommand("list-presets", "list model and hardware presets");

  HwOverrides hwov;
  for (CLI::App* cmd : {plan, est, sim, val, sweep}) hwov.add_options(cmd);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      ModelSpec spec;
      if (!gen_model.empty()) {
        spec = get_model(gen_model);
      } else if (!gen_spec.empty()) {
        std::ifstream in(gen_spec);
        if (!in) throw MalformedTrace("cannot open spec file: " + gen_spec);
        nlohmann::json j = nlohmann::json::parse(in);
        spec.hidden_size = j.at("hidden_size").get<int>();
        spec.n_blocks = j.at("n_blocks").get<int>();
        spec.n_heads = j.at("n_heads").get<int>();
        if (j.contains("vocab_size")) spec.vocab_size = j["vocab_size"].get<int>();
        if (j.contains("seq_len")) spec.seq_len = j["seq_len"].get<int>();
        if (j.contains("batch_size")) spec.batch_size = j["batch_size"].get<int>();
        if (j.contains("dtype_bytes")) spec.dtype_bytes = j["dtype_bytes"].get<int>();
        if (j.contains("ffn_hidden")) spec.ffn_hidden = j["ffn_hidden"].get<int>();
        if (j.contains("n_kv_heads")) spec.n_kv_heads = j["n_kv_heads"].get<int>();
        if (j.contains("gated_mlp")) spec.gated_mlp = j["gated_mlp"].get<bool>();
        if (j.contains("bias")) spec.bias = j["bias"].get<bool>();
        if (j.contains("tied_embeddings"))
          spec.tied_embeddings = j["tied_embeddings"].get<bool>();
        if (j.contains("learned_pos_embedding"))
          spec.learned_pos_embedding = j["learned_pos_embedding"].get<bool>();
      } else {
        err << "usage error: gen-trace needs --model or --spec\n";
        return 2;
      }
      if (gen_batch > 0) spec.batch_size = gen_batch;
      if (gen_seq > 0) spec.seq_len = gen_seq;
      const ModelTrace trace = synthesize_trace(spec, calib);
      std::ostringstream buf;
      save_trace(trace, buf);
      write_output(gen_out, buf.str(), out);
      return 0;
    }

    if (pack->parsed()) {
      const ModelTrace trace = read_trace(pack_trace);
      const auto grid =
          pack_grid.empty() ? default_size_grid(trace) : parse_grid(pack_grid);
      const auto [size, layout] = chunk_size_search(trace, grid);
      nlohmann::ordered_json j;
      j["s_chunk"] = size;
      j["n_chunk"] = layout.n_chunk();
      j["waste_bytes"] = layout.waste_bytes;
      j["chunks"] = nlohmann::ordered_json::array();
      for (const auto& c : layout.chunks) {
        nlohmann::ordered_json jc;
        jc["chunk_id"] = c.chunk_id;
        jc["used_bytes"] = c.used_bytes;
        jc["first_op"] = c.first_op;
        jc["last_op"] = c.last_op;
        jc["block_ids"] = c.block_ids;
        j["chunks"].push_back(std::move(jc));
      }
      write_output(pack_out, j.dump(2) + "\n", out);
      return 0;
    }

    if (plan->parsed()) {
      const auto w = open_workspace(plan_trace, plan_schunk);
      const auto hw = hwov.apply(resolve_hardware(plan_hw));
      CostOptions opts;
      opts.alpha = plan_alpha;
      const auto outcome = find_optimal(w.trace, w.layout, hw, opts);
      const auto sched =
          build_block_schedule(outcome.best.n_block, outcome.best.n_swap,
                               outcome.best.n_checkpoint, outcome.best.n_interval);
      write_output(plan_out, plan_to_json(outcome.best, w.layout, sched, &outcome),
                   out);
      return 0;
    }

    if (est->parsed() || sim->parsed()) {
      const auto w = open_workspace(est_trace, est_schunk);
      const auto hw = hwov.apply(resolve_hardware(est_hw));
      const auto config = resolve_config(w, hw, est_plan, est_np, est_nb, est_ns,
                                         est_nc);
      // an explicit plan may carry its own chunk size
      const auto layout = config.s_chunk == w.s_chunk
                              ? w.layout
                              : pack_chunks(w.trace, config.s_chunk);
      const auto sched = build_block_schedule(config.n_block, config.n_swap,
                                              config.n_checkpoint,
                                              config.n_interval);
      if (est->parsed()) {
        CostOptions opts;
        opts.alpha = est_alpha;
        const auto e = estimate_iteration(w.trace, layout, sched, config, hw, opts);
        write_output(est_out, estimate_to_json(e), out);
      } else {
        const auto r = simulate(w.trace, layout, sched, config, hw);
        if (!sim_timeline.empty()) {
          std::ofstream f(sim_timeline);
          timeline_to_chrome_trace(r.timeline, f);
        }
        if (!sim_timeline_csv.empty()) {
          std::ofstream f(sim_timeline_csv);
          timeline_to_csv(r.timeline, f);
        }
        if (!sim_memtrace.empty()) {
          std::ofstream f(sim_memtrace);
          mem_trace_to_csv(r.mem_trace, f);
        }
        write_output(est_out, simulation_to_json(r), out);
      }
      return 0;
    }

    if (val->parsed()) {
      const auto w = open_workspace(val_trace, val_schunk);
      const auto hw = hwov.apply(resolve_hardware(val_hw));
      CostOptions opts;
      opts.alpha = val_alpha;
      const auto configs = sample_feasible_configs(w.trace, w.layout, hw,
                                                   val_samples, val_seed, opts);
      if (configs.empty()) throw NoFeasibleConfig("no feasible config to sample");
      const auto report = validate(w.trace, w.layout, hw, configs, opts);
      std::ostringstream buf;
      report.to_csv(buf);
      write_output(val_out, buf.str(), out);
      err << "max_t_rel_err=" << report.max_t_rel_err
          << " median_t_rel_err=" << report.median_t_rel_err
          << " m_ratio=[" << report.min_m_ratio << "," << report.max_m_ratio
          << "]\n";
      return 0;
    }

    if (sweep->parsed()) {
      const auto w = open_workspace(sw_trace, sw_schunk);
      const auto hw = hwov.apply(resolve_hardware(sw_hw));
      CostOptions opts;
      opts.alpha = sw_alpha;
      const int n_chunk = w.layout.n_chunk();
      const int n_block = w.trace.n_blocks;
      const int n_interval = compute_interval(w.trace, hw);
      Range rp = parse_range(sw_np), rb = parse_range(sw_nb),
            rs = parse_range(sw_ns), rc = parse_range(sw_nc);
      if (rp.hi < 0) rp.hi = n_chunk;
      std::ostringstream buf;
      buf << "s_chunk,n_chunk,n_persist,n_buffer,n_block,n_interval,n_swap,"
             "n_checkpoint,t_fwd,t_bwd,t_gpu_optim,t_cpu_optim,t_iter,m_peak\n";
      for (int np = rp.lo; np <= rp.hi; ++np) {
        int blo = rb.lo, bhi = rb.hi;
        if (blo < 0) blo = np < n_chunk ? std::min(3, n_chunk - np) : 0;
        if (bhi < 0) bhi = blo;
        for (int nb = blo; nb <= std::min(bhi, n_chunk - np); ++nb) {
          for (int ns = rs.lo; ns <= rs.hi; ++ns) {
            for (int nc = rc.lo; nc <= std::min(rc.hi, n_block - ns); ++nc) {
              PlanConfig c;
              c.s_chunk = w.s_chunk;
              c.n_chunk = n_chunk;
              c.n_persist = np;
              c.n_buffer = nb;
              c.n_block = n_block;
              c.n_interval = n_interval;
              c.n_swap = ns;
              c.n_checkpoint = nc;
              try {
                c.validate();
                const auto sched =
                    build_block_schedule(n_block, ns, nc, n_interval);
                const auto e =
                    estimate_iteration(w.trace, w.layout, sched, c, hw, opts);
                buf << c.s_chunk << ',' << c.n_chunk << ',' << np << ',' << nb
                    << ',' << n_block << ',' << n_interval << ',' << ns << ','
                    << nc << ',' << e.t_fwd << ',' << e.t_bwd << ','
                    << e.t_gpu_optim << ',' << e.t_cpu_optim << ',' << e.t_iter
                    << ',' << e.m_peak << "\n";
              } catch (const Error&) {
                // invalid corner of the requested ranges, skip the row
              }
            }
          }
        }
      }
      write_output(sw_out, buf.str(), out);
      return 0;
    }

    if (lp->parsed()) {
      nlohmann::ordered_json j;
      j["models"] = nlohmann::ordered_json::array();
      for (const auto& name : PresetCatalog::model_names()) {
        const auto m = get_model(name);
        nlohmann::ordered_json row;
        row["name"] = name;
        row["hidden_size"] = m.hidden_size;
        row["n_blocks"] = m.n_blocks;
        row["n_heads"] = m.n_heads;
        row["total_params"] = m.total_params();
        j["models"].push_back(std::move(row));
      }
      j["hardware"] = nlohmann::ordered_json::array();
      for (const auto& name : PresetCatalog::hardware_names()) {
        const auto h = get_hardware(name);
        nlohmann::ordered_json row;
        row["name"] = name;
        row["h2d_bw"] = h.h2d_bw;
        row["coll_bw"] = h.coll_bw;
        row["world_size"] = h.world_size;
        row["gpu_mem"] = h.gpu_mem;
        j["hardware"].push_back(std::move(row));
      }
      out << j.dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << e.name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace memplan
