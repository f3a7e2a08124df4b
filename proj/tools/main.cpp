#include "singarc/cli.hpp"

int main(int argc, char** argv) { return singarc::cli::run_cli(argc, argv); }
