"""Ready-to-run demo material: example scripts, schedules and assets.

The scripts cover the main test designs: two-alternative minimal-pair
identification, loudness judgement with per-trial gain, gating (truncated
playback), and picture/word judgement with sound feedback.  Audio assets
are synthesized sine beeps and images are solid-color cards, so a demo
workspace can be generated anywhere without shipping binaries.
"""

from __future__ import annotations

import math
import wave
from pathlib import Path

from PIL import Image

#: Catalog script: 20 two-alternative trials, randomized test order,
#: a four-trial training phase, and a full settings block.
MINIMAL_PAIRS_SCRIPT = """\
[INFORMATION]
AUTHOR=A. Ghio & C. André
DATE=14/01/2003
TITLE=Paires Minimales réduites
VERSION=3.0.2.0

[TRIAL_DATA]
TRIAL1=<1)main 2)bain>          <bain.wav>          <Choix2>          <-nasal>          <E~>
TRIAL2=<1)bain 2)main>          <main.wav>          <Choix2>          <+nasal>          <E~>
TRIAL3=<1)bal 2)val>            <bal.wav>           <Choix1>          <+interrompu>     <aa>
TRIAL4=<1)val 2)bal>            <val.wav>           <Choix1>          <-interrompu>     <aa>
TRIAL5=<1)pont 2)bond>          <pont.wav>          <Choix1>          <-voisé>          <oo>
TRIAL6=<1)fou 2)vous>           <fou.wav>           <Choix1>          <-voisé>          <uu>
TRIAL7=<1)car 2)gare>           <gare.wav>          <Choix2>          <+voisé>          <aa>
TRIAL8=<1)bosse 2)gosse>        <bosse.wav>         <Choix1>          <+compact>        <oo>
TRIAL9=<1)thon 2)don>           <thon.wav>          <Choix1>          <-voisé>          <oo>
TRIAL10=<1)poule 2)boule>       <boule.wav>         <Choix2>          <+voisé>          <uu>
TRIAL11=<1)fer 2)ver>           <ver.wav>           <Choix2>          <+voisé>          <EE>
TRIAL12=<1)dette 2)bette>       <bette.wav>         <Choix2>          <-grave>          <EE>
TRIAL13=<1)sel 2)selle>         <sel.wav>           <Choix1>          <-long>           <EE>
TRIAL14=<1)latte 2)ratte>       <ratte.wav>         <Choix2>          <+compact>        <aa>
TRIAL15=<1)mou 2)nous>          <nous.wav>          <Choix2>          <+aigu>           <uu>
TRIAL16=<1)paire 2)terre>       <paire.wav>         <Choix1>          <+grave>          <EE>
TRIAL17=<1)veste 2)ouest>       <veste.wav>         <Choix1>          <-vocalique>      <EE>
TRIAL18=<1)rude 2)ruse>         <ruse.wav>          <Choix2>          <+voisé>          <yy>
TRIAL19=<1)cape 2)cave>         <cave.wav>          <Choix2>          <+voisé>          <aa>
TRIAL20=<1)furent 2)surent>     <surent.wav>        <Choix2>          <+grave>          <yy>
... #1 #2 #3 #4 #5

[TRIAL_EVENTS]
X10=BEGIN
X20=DISPLAY_TEXT<#1>
X30=PLAY_SOUND<#2>
X40=GET_INPUT<DELAY 2000>
X50=END

[SETTINGS_GROUP1]
INSTRUCTION_FORMAT=<Pairemin.txt> *1
TRAINING_ORDER=<1 3 4 6> *2
TRIAL_ORDER=<RANDOM> *3
TEXT_FORMAT=<FONT Arial><SIZE 30><BKCOLOR 0x0000FF><TXTCOLOR 0xFFFF00><POSITION HCenter|VCenter> *4
INPUT=<Choix1 CK_1 VK_NUMPAD1 BK_01><Choix2 CK_2 VK_NUMPAD2 BK_02> *5
CORRECT=<#3> *6
PAUSE=0 *7
RESPONSE_FORMAT=<$$SUBJECT><$TRIAL><#1><#2><#3><$RESPONSE><$ERROR><#4><#5><$RTIME> *8
"""

#: Fixed-order session over seven of the catalog trials, in the exact
#: order a recorded run once played them.
MINIMAL_PAIRS_SESSION_SCRIPT = """\
[INFORMATION]
AUTHOR=A. Ghio & C. André
DATE=14/01/2003
TITLE=Paires minimales session
VERSION=3.0.2.0

[TRIAL_DATA]
TRIAL4=<1)val 2)bal> <val.wav> <Choix1> <-interrompu> <aa>
TRIAL1=<1)main 2)bain> <bain.wav> <Choix2> <-nasal> <E~>
TRIAL14=<1)latte 2)ratte> <ratte.wav> <Choix2> <+compact> <aa>
TRIAL17=<1)veste 2)ouest> <veste.wav> <Choix1> <-vocalique> <EE>
TRIAL20=<1)furent 2)surent> <surent.wav> <Choix2> <+grave> <yy>
TRIAL12=<1)dette 2)bette> <bette.wav> <Choix2> <-grave> <EE>
TRIAL8=<1)bosse 2)gosse> <bosse.wav> <Choix1> <+compact> <oo>

[TRIAL_EVENTS]
X10=BEGIN
X20=DISPLAY_TEXT<#1>
X30=PLAY_SOUND<#2>
X40=GET_INPUT<DELAY 2000>
X50=END

[SETTINGS_GROUP1]
TRIAL_ORDER=<FIXED>
TEXT_FORMAT=<FONT Arial><SIZE 30><BKCOLOR 0x0000FF><TXTCOLOR 0xFFFF00><POSITION HCenter|VCenter>
INPUT=<Choix1 CK_1 VK_NUMPAD1 BK_01><Choix2 CK_2 VK_NUMPAD2 BK_02>
CORRECT=<#3>
PAUSE=0
RESPONSE_FORMAT=<$SUBJECT><$TRIAL><#1><#2><#3><$RESPONSE><$ERROR><#4><#5><$RTIME>
"""

#: Schedule reproducing that recorded session (responses given as key
#: codes; latencies in ms from stimulus onset; '-' = never answered).
MINIMAL_PAIRS_SESSION_SCHEDULE = """\
# trial_id,response_code,latency_ms
4,CK_2,1072
1,CK_2,748
14,CK_1,1012
17,CK_1,830
20,CK_2,1066
12,CK_2,1218
8,-,0
"""

#: Loudness judgement: the per-trial column sets the playback gain in dB.
VOLUME_SCRIPT = """\
[TRIAL_DATA]
TRIAL1=<0>
TRIAL2=<-3>
TRIAL3=<-6>

[TRIAL_EVENTS]
X10=BEGIN
X20=DISPLAY_TEXT<1)Fort 2)Faible>
X30=PLAY_SOUND<aaa.wav><VOLUME #1>
X40=GET_INPUT
X50=END
"""

#: Runnable variant with response keys configured.
VOLUME_DEMO_SCRIPT = VOLUME_SCRIPT + """
[SETTINGS_GROUP1]
TRIAL_ORDER=<FIXED>
INPUT=<Fort CK_1 VK_NUMPAD1 BK_01><Faible CK_2 VK_NUMPAD2 BK_02>
PAUSE=0
RESPONSE_FORMAT=<$SUBJECT><$TRIAL><#1><$RESPONSE><$RTIME>
"""

#: Gating: only the first N ms of the word are played.
GATING_SCRIPT = """\
[TRIAL_DATA]
TRIAL1=<bêlé><bele.wav><200>
TRIAL2=<bêlé><bele.wav><250>
TRIAL3=<bêlé><bele.wav><275>
TRIAL4=<bête><bette.wav><200>
TRIAL5=<bête><bette.wav><250>

[TRIAL_EVENTS]
X10=BEGIN
X20=DISPLAY_TEXT<1) bêlé 2) bête>
X30=PLAY_SOUND<#2><TIME_BEGIN 0><TIME_END #3>
X40=GET_INPUT<DELAY 2000>
X50=END
"""

GATING_DEMO_SCRIPT = GATING_SCRIPT + """
[SETTINGS_GROUP1]
TRIAL_ORDER=<FIXED>
INPUT=<bêlé CK_1 VK_NUMPAD1 BK_01><bête CK_2 VK_NUMPAD2 BK_02>
PAUSE=0
RESPONSE_FORMAT=<$SUBJECT><$TRIAL><#2><#3><$RESPONSE><$RTIME>
"""

#: Picture/word judgement with right/wrong feedback sounds.
FEEDBACK_SCRIPT = """\
[TRIAL_DATA]
TRIAL1=<catre><faute><catre.bmp>
TRIAL2=<glace><faute><glace.bmp>
TRIAL3=<horloche><faute><horloche.bmp>
TRIAL4=<sourus><faute><sourus.bmp>

[TRIAL_EVENTS]
X10=BEGIN
X20=DISPLAY_FILEBMP<#3>
X40=GET_INPUT<DELAY 3000>
X50=END

[SETTINGS_GROUP1]
TRIAL_ORDER=<FIXED>
INPUT=<juste CK_1 VK_NUMPAD1 BK_01><faute CK_2 VK_NUMPAD2 BK_02>
CORRECT=<#2>
PAUSE=500
RESPONSE_FORMAT=<$SUBJECT><$TRIAL><#1><$RESPONSE><$ERROR><$RTIME>
SOUND_FEEDBACK=<POSITIVE clap.wav><NEGATIVE glass.wav>
"""

INSTRUCTIONS_TEXT = """\
Vous allez entendre un mot.
Appuyez sur 1 si vous avez entendu le premier mot affiché,
sur 2 si vous avez entendu le second.
Répondez aussi vite que possible.
"""

_WORD_FREQS = {
    "bain": 220, "main": 233, "bal": 247, "val": 262, "pont": 277, "fou": 294,
    "gare": 311, "bosse": 330, "thon": 349, "boule": 370, "ver": 392,
    "bette": 415, "sel": 440, "ratte": 466, "nous": 494, "paire": 523,
    "veste": 554, "ruse": 587, "cave": 622, "surent": 659,
    "aaa": 440, "bele": 349, "clap": 880, "glass": 110,
}

_CARD_COLORS = {
    "catre": (70, 130, 180),
    "glace": (255, 250, 250),
    "horloche": (184, 134, 11),
    "sourus": (105, 105, 105),
}


def write_sine_wav(
    path: str | Path,
    freq: float = 440.0,
    ms: int = 300,
    rate: int = 16000,
    channels: int = 1,
    sample_width: int = 2,
    amplitude: float = 0.5,
) -> Path:
    """Write a PCM sine beep; 8- or 16-bit, mono or stereo."""
    path = Path(path)
    frames = int(rate * ms / 1000)
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(channels)
        writer.setsampwidth(sample_width)
        writer.setframerate(rate)
        data = bytearray()
        for i in range(frames):
            value = amplitude * math.sin(2 * math.pi * freq * i / rate)
            for _ in range(channels):
                if sample_width == 1:
                    data.append(int(round(value * 127)) + 128)
                else:
                    data += int(round(value * 32767)).to_bytes(2, "little", signed=True)
        writer.writeframes(bytes(data))
    return path


def write_card_image(path: str | Path, color: tuple[int, int, int], size: tuple[int, int] = (96, 64)) -> Path:
    """Write a solid-color card as BMP or PNG (by extension)."""
    path = Path(path)
    Image.new("RGB", size, color).save(path)
    return path


def build_demo_workspace(dest: str | Path) -> dict[str, Path]:
    """Create scripts/, assets/ and schedules/ under dest; returns key paths."""
    dest = Path(dest)
    scripts = dest / "scripts"
    assets = dest / "assets"
    schedules = dest / "schedules"
    for directory in (scripts, assets, schedules):
        directory.mkdir(parents=True, exist_ok=True)

    paths = {
        "minimal_pairs": scripts / "minimal_pairs.txt",
        "minimal_pairs_session": scripts / "minimal_pairs_session.txt",
        "volume": scripts / "volume.txt",
        "gating": scripts / "gating.txt",
        "feedback": scripts / "feedback.txt",
        "session_schedule": schedules / "minimal_pairs_ca.schedule",
        "assets": assets,
    }
    paths["minimal_pairs"].write_text(MINIMAL_PAIRS_SCRIPT, encoding="utf-8")
    paths["minimal_pairs_session"].write_text(MINIMAL_PAIRS_SESSION_SCRIPT, encoding="utf-8")
    paths["volume"].write_text(VOLUME_DEMO_SCRIPT, encoding="utf-8")
    paths["gating"].write_text(GATING_DEMO_SCRIPT, encoding="utf-8")
    paths["feedback"].write_text(FEEDBACK_SCRIPT, encoding="utf-8")
    paths["session_schedule"].write_text(MINIMAL_PAIRS_SESSION_SCHEDULE, encoding="utf-8")

    (assets / "Pairemin.txt").write_text(INSTRUCTIONS_TEXT, encoding="utf-8")
    for word, freq in _WORD_FREQS.items():
        write_sine_wav(assets / f"{word}.wav", freq=freq)
    for word, color in _CARD_COLORS.items():
        write_card_image(assets / f"{word}.bmp", color)
    return paths
