"""GCN/MPGNN graph classifiers with PAC-Bayesian robust generalization certificates."""

__version__ = "0.1.0"
