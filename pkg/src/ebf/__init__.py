"""EBF: hybrid verification for MCL, a small C-like concurrent language.

A bounded model checker (explicit-state, loop-unwound, context-bounded)
hunts for property violations and hands its counterexample inputs to a
schedule-aware grey-box fuzzer, which mutates both program inputs and
thread-interleaving entropy under coverage guidance.  Together the two
phases catch memory-corruption and concurrency bugs that either one
alone misses.

Typical use::

    from ebf.lang import SourceProgram
    from ebf.pipeline import PipelineConfig, verify

    report = verify(SourceProgram("prog.mcl", text), PipelineConfig())

or from the shell: ``ebf verify prog.mcl`` / ``ebf bench``.
"""

__version__ = "0.1.0"
