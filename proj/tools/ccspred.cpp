// ccspred: generate | train | compare | predict over the concrete strength
// model suite. Flags only select config files and targets; every knob lives
// in the config so a run is reproducible from the file alone.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "ccs/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"concrete compressive strength model benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string model_kind_str;
    int age_days = 28;
    std::string model_file, input_csv, output_csv;

    CLI::App* generate = app.add_subcommand("generate", "write a synthetic CSV pair plus its config sidecar");
    generate->add_option("--config", config_path, "run config JSON")->required();

    CLI::App* train = app.add_subcommand("train", "fit one model on the 80% split and persist it");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--model", model_kind_str, "linear | tree | forest | transformer | embednet")->required();
    train->add_option("--age", age_days, "curing age in days: 7 or 28")->required();

    CLI::App* compare = app.add_subcommand("compare", "run the five-model comparison and write reports");
    compare->add_option("--config", config_path, "run config JSON")->required();

    CLI::App* predict = app.add_subcommand("predict", "append predicted_psi to a conforming input CSV");
    predict->add_option("--model-file", model_file, "trained model container")->required();
    predict->add_option("--input", input_csv, "input CSV")->required();
    predict->add_option("--output", output_csv, "output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            return ccs::cmd_generate(ccs::RunConfig::from_file(config_path));
        }
        if (train->parsed()) {
            const auto kind = ccs::kind_from_name(model_kind_str);
            if (!kind) {
                std::cerr << "error: unknown model kind '" << model_kind_str
                          << "' (valid: linear, tree, forest, transformer, embednet)\n";
                return 64;
            }
            return ccs::cmd_train(ccs::RunConfig::from_file(config_path), *kind, ccs::age_from_days(age_days));
        }
        if (compare->parsed()) {
            return ccs::cmd_compare(ccs::RunConfig::from_file(config_path));
        }
        if (predict->parsed()) {
            return ccs::cmd_predict(model_file, input_csv, output_csv);
        }
    } catch (const ccs::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ccs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
