#include "commands.hpp"

int main(int argc, char** argv) { return maggait::cli::run(argc, argv); }
