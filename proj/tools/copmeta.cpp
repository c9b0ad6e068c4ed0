#include "cli.hpp"

int main(int argc, char** argv) { return copmeta::cli::run(argc, argv); }
