#include "sciembed_cli/cli.hpp"

#include <CLI11.hpp>

#include "commands.hpp"
#include "sciembed/error.hpp"

namespace sciembed::cli {

const char* version() noexcept { return SCIEMBED_VERSION; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Document embedding toolkit for PubMed-scale corpora", "sciembed"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u));

  Action selected;
  register_pipeline_commands(app, selected);
  register_analysis_commands(app, selected);

  // CLI11 consumes arguments from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Context ctx{out, err, threads};
  try {
    return selected(ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace sciembed::cli
