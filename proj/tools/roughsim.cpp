#include "roughsim/cli.hpp"

int main(int argc, char** argv) { return roughsim::cli::run(argc, argv); }
