#include "senseloom/cli.hpp"

int main(int argc, char** argv) { return senseloom::cli::run(argc, argv); }
