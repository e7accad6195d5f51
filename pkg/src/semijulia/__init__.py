"""Julia sets of finitely generated rational semigroups and uniform-perfectness diagnostics."""
