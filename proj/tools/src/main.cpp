#include "kglab/tools/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"kglab: Klein-Gordon inverse and asymptotics experiments"};
    kglab::tools::RunRequest req;
    std::string config, out;
    app.add_option("command", req.command, "free-check | factorize | solve | asymptotics | microlocal | laplim | converge | all")
        ->required();
    app.add_option("--config", config, "experiment JSON document");
    app.add_option("--out", out, "output directory (overrides experiment.out)");
    app.add_option("--method", req.method, "solve method: feynman | retarded | advanced | bvp");
    app.add_option("--axis", req.axis, "converge axis: dt | h | T");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kglab::tools::kExitConfig;
    }
    if (!config.empty()) req.config = config;
    if (!out.empty()) req.out = out;
    return kglab::tools::run(req, std::cout, std::cerr);
}
