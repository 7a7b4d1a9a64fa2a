"""Regenerate the bundled mini dataset under src/aqg/data/mini/."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "aqg" / "data" / "mini"

TRAIN = {
    "History": [
        ("The Harappan cities had planned streets laid out in a grid and covered drains made of burnt bricks.", "How were the streets of Harappan cities planned?"),
        ("Ashoka gave up war after the battle of Kalinga and spread the message of dhamma through inscriptions on rocks and pillars.", "Why did Ashoka give up war?"),
        ("The Mughal emperor Akbar introduced the mansabdari system, in which officials held ranks that fixed their pay and military duties.", "What was the mansabdari system?"),
        ("The revolt of 1857 began among sepoys at Meerut and soon spread to Delhi, Kanpur and Lucknow.", "Where did the revolt of 1857 begin?"),
        ("Gandhi led the Salt March in 1930 from Sabarmati to Dandi to break the British salt law.", "What was the purpose of the Salt March?"),
        ("The Chola kings built large temples such as the Brihadeshvara temple at Thanjavur, which also served as centres of economic life.", "What role did Chola temples play besides worship?"),
    ],
    "Geography": [
        ("The Himalayas are young fold mountains formed by the collision of the Indian plate with the Eurasian plate.", "How were the Himalayas formed?"),
        ("Black soil, also called regur soil, retains moisture well and is ideal for growing cotton.", "Why is black soil suitable for cotton?"),
        ("The southwest monsoon brings most of India's rainfall between June and September.", "When does India receive most of its rainfall?"),
        ("Mangrove forests grow in the tidal swamps of deltas such as the Sundarbans, where trees have roots that rise above the water.", "Where do mangrove forests grow?"),
        ("Latitude lines run east to west and measure distance north or south of the equator.", "What do lines of latitude measure?"),
        ("The Thar desert receives less than 150 millimetres of rain a year and has sand dunes that shift with the wind.", "How much rain does the Thar desert receive?"),
    ],
    "Economics": [
        ("Gross domestic product is the value of all final goods and services produced within a country in a year.", "What does gross domestic product measure?"),
        ("Inflation is a general rise in prices that reduces the purchasing power of money over time.", "How does inflation affect money?"),
        ("The primary sector includes activities such as farming, fishing and mining that use natural resources directly.", "Which activities belong to the primary sector?"),
        ("Self-help groups pool the savings of rural women and give small loans to members at reasonable interest.", "How do self-help groups help rural women?"),
        ("Disguised unemployment occurs when more people work on a farm than are actually needed.", "What is disguised unemployment?"),
        ("The Reserve Bank of India supervises banks and issues currency notes on behalf of the government.", "What are the functions of the Reserve Bank of India?"),
    ],
    "EnvironmentalStudies": [
        ("Rainwater harvesting collects rain from rooftops and stores it in tanks or sends it underground to recharge wells.", "What is rainwater harvesting?"),
        ("Plastic bags thrown on the roadside block drains and are sometimes eaten by cows.", "Why are plastic bags harmful?"),
        ("Bees carry pollen from one flower to another while collecting nectar, which helps plants form seeds.", "How do bees help plants?"),
        ("Compost is made by letting kitchen and garden waste rot in a pit, producing manure for plants.", "How is compost made?"),
        ("Many villages in Rajasthan store water in stepwells called baolis, which have steps leading down to the water.", "What is a baoli?"),
        ("Cutting down forests removes the roots that hold soil, so heavy rain washes the topsoil away.", "What happens to soil when forests are cut?"),
    ],
    "Science": [
        ("Photosynthesis takes place in the green leaves of plants, which use sunlight, carbon dioxide and water to make food.", "Where does photosynthesis take place?"),
        ("A magnet has two poles, and like poles repel each other while unlike poles attract.", "What happens when like poles of two magnets are brought together?"),
        ("Sound needs a medium such as air, water or a solid to travel and cannot pass through a vacuum.", "Why can sound not travel through a vacuum?"),
        ("Acids turn blue litmus paper red, while bases turn red litmus paper blue.", "How can litmus paper show whether a substance is an acid?"),
        ("The heart pumps blood through arteries to all parts of the body, and veins carry it back.", "What is the function of the heart?"),
        ("Friction is the force that opposes motion between two surfaces in contact.", "What is friction?"),
    ],
}

TEST = {
    "History": [
        ("The Vijayanagara empire was founded in 1336 by Harihara and Bukka, and its capital Hampi became a great trading city.", "Who founded the Vijayanagara empire?"),
        ("The Indian National Congress was formed in 1885 to give educated Indians a platform to put their demands before the British government.", "Why was the Indian National Congress formed?"),
        ("The Gupta period saw advances in mathematics, including the use of zero and the decimal place value system.", "What advances in mathematics were made in the Gupta period?"),
        ("Buddhist monks lived in monasteries called viharas and spent the rainy season there teaching and studying.", "What were viharas?"),
    ],
    "Geography": [
        ("The Ganga plain is formed of alluvial soil deposited by rivers flowing down from the Himalayas and is one of the most fertile regions of India.", "Why is the Ganga plain fertile?"),
        ("Western Ghats receive heavy rainfall because moist monsoon winds rise along their slopes and cool.", "Why do the Western Ghats receive heavy rainfall?"),
        ("Coral reefs are built by tiny marine animals in shallow, warm and clear sea water, as around Lakshadweep.", "Where are coral reefs found?"),
        ("Time zones are based on longitude, and the Earth rotates fifteen degrees of longitude every hour.", "How are time zones related to longitude?"),
    ],
    "Economics": [
        ("A budget deficit arises when a government spends more than it earns from taxes and other receipts in a year, and it is usually met by borrowing.", "How is a budget deficit met?"),
        ("Minimum support price is the price at which the government buys crops from farmers to protect them from a sharp fall in market prices.", "What is minimum support price?"),
        ("Globalisation links the economies of countries through trade, investment and the movement of technology.", "What is globalisation?"),
        ("A consumer can file a complaint in a consumer court if a shopkeeper sells defective goods.", "What can a consumer do if sold defective goods?"),
    ],
    "EnvironmentalStudies": [
        ("Solar cookers use sunlight reflected by mirrors to cook food without any fuel.", "How does a solar cooker work?"),
        ("Wetlands such as Chilika lake give shelter to migratory birds that arrive in winter from colder lands.", "Why do migratory birds come to Chilika lake?"),
        ("Smoke from burning crop stubble after the harvest adds to air pollution in northern Indian cities.", "How does burning crop stubble affect cities?"),
        ("Ants live in colonies where the queen lays eggs and worker ants collect food.", "What do worker ants do?"),
    ],
    "Science": [
        ("Plants lose water through tiny pores on their leaves called stomata in a process known as transpiration.", "What is transpiration?"),
        ("An electric circuit is complete only when the switch is closed, so current can flow from the cell through the bulb.", "When does current flow in an electric circuit?"),
        ("Light travels in straight lines, which is why objects cast shadows when light falls on them.", "Why do objects cast shadows?"),
        ("Water boils at 100 degrees Celsius at sea level and changes into steam.", "At what temperature does water boil at sea level?"),
    ],
}


def write(name, data, prefix):
    lines = []
    for subject, pairs in data.items():
        for n, (context, question) in enumerate(pairs, start=1):
            rec = {"id": f"{prefix}-{subject[:4].lower()}-{n:02d}", "context": context, "question": question, "subject": subject}
            lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    (OUT / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write("train.jsonl", TRAIN, "train")
    write("test.jsonl", TEST, "test")
