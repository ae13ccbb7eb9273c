import pytest

from elinda.graph import build_graph
from elinda.ntriples import parse_ntriples

G_MUSIC_NT = """\
<http://x/Work> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://x/Album> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://x/Work> .
<http://x/Single> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://x/Work> .
<http://x/a1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Album> .
<http://x/a2> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Album> .
<http://x/s1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Single> .
<http://x/a1> <http://x/artist> <http://x/bob> .
<http://x/a2> <http://x/artist> <http://x/bob> .
<http://x/a1> <http://x/name> "A1" .
<http://x/bob> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Person> .
"""

X = "http://x/"
WORK = X + "Work"
ALBUM = X + "Album"
SINGLE = X + "Single"
PERSON = X + "Person"
ARTIST = X + "artist"
NAME = X + "name"
A1, A2, S1, BOB = X + "a1", X + "a2", X + "s1", X + "bob"


@pytest.fixture(scope="session")
def g_music_nt() -> str:
    return G_MUSIC_NT


@pytest.fixture(scope="session")
def g_music_triples():
    return list(parse_ntriples(G_MUSIC_NT))


@pytest.fixture()
def g_music(g_music_triples):
    return build_graph(g_music_triples)


@pytest.fixture(scope="session")
def g_music_file(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "g_music.nt"
    path.write_text(G_MUSIC_NT, encoding="utf-8")
    return str(path)
